//! Command-line entry point: synthesize data, prepare examples, train,
//! evaluate, score unseen edges and dump walk contexts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use edgechurn::checkpoint::Checkpoint;
use edgechurn::config::RunConfig;
use edgechurn::dataset::{self, read_dataset, read_edge_queries, write_dataset};
use edgechurn::edgefeat::{edge_feature_vector, FeatureSchema};
use edgechurn::evalkit::{roc_csv, roc_points, MetricsRow};
use edgechurn::pipeline::evaluate;
use edgechurn::synthgen::generate;
use edgechurn::trainer::{build_examples, build_examples_with, train, BuildOptions, EpochStats, ExampleSet, TrainMode};
use edgechurn::{Day, EdgeKey, SnapshotSeries};

#[derive(Parser)]
#[command(name = "edgechurn", version, about = "Churn prediction with inductive edge embeddings")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; defaults apply to anything it leaves out.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Churn window in days.
    #[arg(long = "T", global = true)]
    window: Option<u32>,
    /// `cotrain` or `alternate`.
    #[arg(long, global = true)]
    mode: Option<TrainMode>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Dataset directory for read commands.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
    #[arg(long = "batch", global = true)]
    batch_size: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a planted-signal dataset.
    Synth {
        #[arg(long)]
        days: Option<u32>,
        #[arg(long)]
        players: Option<u32>,
        #[arg(long)]
        games: Option<u32>,
    },
    /// Build training examples and their context vocabulary.
    Prepare,
    /// Train on a dataset (or prepared examples) and write a checkpoint.
    Train {
        /// Examples written by `prepare`; built from the dataset otherwise.
        #[arg(long)]
        examples: Option<PathBuf>,
    },
    /// Chronological evaluation of SS, RS and the LR baseline.
    Evaluate,
    /// Score edges from a checkpoint; edges need not appear in training.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        /// CSV with `player,game,day` and optionally one column per edge feature.
        #[arg(long)]
        edges: PathBuf,
    },
    /// Write sampled walk contexts for inspection.
    WalkDump {
        /// Only this day; every day when omitted.
        #[arg(long)]
        day: Option<Day>,
    },
}

/// Files created by a command, removed again unless the command succeeds.
struct Outputs {
    files: Vec<PathBuf>,
    created_dir: Option<PathBuf>,
    done: bool,
}

impl Outputs {
    fn in_dir(dir: &Path) -> Result<Self> {
        let created_dir = if dir.exists() {
            None
        } else {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            Some(dir.to_path_buf())
        };
        Ok(Outputs {
            files: Vec::new(),
            created_dir,
            done: false,
        })
    }

    fn track(&mut self, path: PathBuf) -> PathBuf {
        self.files.push(path.clone());
        path
    }

    fn write(&mut self, path: PathBuf, contents: impl AsRef<[u8]>) -> Result<()> {
        let path = self.track(path);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
    }

    fn commit(mut self) {
        self.done = true;
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if self.done {
            return;
        }
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
        if let Some(d) = &self.created_dir {
            let _ = fs::remove_dir(d);
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli.common)?;
    let out = cli.common.out.clone();
    match cli.command {
        Command::Synth { days, players, games } => synth(cfg, &out, days, players, games),
        Command::Prepare => prepare(&cfg, &out),
        Command::Train { examples } => train_cmd(&cfg, &out, examples.as_deref()),
        Command::Evaluate => evaluate_cmd(&cfg, &out),
        Command::Predict { checkpoint, edges } => predict(&cfg, &out, &checkpoint, &edges),
        Command::WalkDump { day } => walk_dump(&cfg, &out, day),
    }
}

fn load_config(c: &Common) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = c.seed {
        cfg.train.seed = seed;
        cfg.synth.seed = seed;
    }
    if let Some(t) = c.window {
        cfg.data.window = Some(t);
        cfg.synth.window = t;
    }
    if let Some(m) = c.mode {
        cfg.train.mode = m;
    }
    if let Some(d) = &c.data {
        cfg.data.dir = d.clone();
    }
    if let Some(a) = c.alpha {
        cfg.loss.alpha = a;
    }
    if let Some(b) = c.beta {
        cfg.loss.beta = b;
    }
    if let Some(e) = c.epochs {
        cfg.train.epochs = e;
    }
    if let Some(b) = c.batch_size {
        cfg.train.batch_size = b;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_dataset(cfg: &RunConfig) -> Result<(SnapshotSeries, FeatureSchema)> {
    cfg.require_dataset()?;
    let (series, mut schema) = read_dataset(&cfg.data.dir, cfg.data.window)
        .with_context(|| format!("reading dataset {}", cfg.data.dir.display()))?;
    if let Some(cols) = &cfg.features.interactions {
        schema = schema.with_interactions(cols.clone())?;
    }
    Ok((series, schema))
}

fn synth(mut cfg: RunConfig, out: &Path, days: Option<u32>, players: Option<u32>, games: Option<u32>) -> Result<()> {
    if let Some(d) = days {
        cfg.synth.days = d;
    }
    if let Some(p) = players {
        cfg.synth.n_players = p;
    }
    if let Some(g) = games {
        cfg.synth.n_games = g;
    }
    let data = generate(&cfg.synth)?;
    let mut outputs = Outputs::in_dir(out)?;
    for f in [dataset::PLAYS_FILE, dataset::FEATURES_FILE, dataset::META_FILE] {
        outputs.track(out.join(f));
    }
    write_dataset(out, &data.series, &data.schema)?;
    let mut table = String::from("age,expected,empirical\n");
    for (k, (e, m)) in data.survival.expected.iter().zip(&data.survival.empirical).enumerate() {
        writeln!(table, "{k},{e},{m}")?;
    }
    outputs.write(out.join("survival.csv"), table)?;
    outputs.commit();
    println!(
        "wrote {} plays over days {}..={} to {}",
        data.series.records().count(),
        data.series.t0(),
        data.series.t_end(),
        out.display()
    );
    Ok(())
}

fn prepare(cfg: &RunConfig, out: &Path) -> Result<()> {
    let (series, schema) = load_dataset(cfg)?;
    let t = cfg.train_config();
    let set = build_examples(&series, &schema, &t.walk, t.seed)?;
    let mut outputs = Outputs::in_dir(out)?;
    outputs.write(out.join("examples.json"), serde_json::to_vec(&set)?)?;
    outputs.commit();
    println!(
        "{} examples, {} contexts, {} skipped",
        set.examples.len(),
        set.vocab.len(),
        set.skipped
    );
    Ok(())
}

fn train_cmd(cfg: &RunConfig, out: &Path, examples: Option<&Path>) -> Result<()> {
    let t = cfg.train_config();
    let (set, schema) = match examples {
        Some(p) => {
            let text = fs::read(p).with_context(|| format!("reading {}", p.display()))?;
            let set: ExampleSet = serde_json::from_slice(&text).with_context(|| format!("parsing {}", p.display()))?;
            cfg.require_dataset()?;
            let meta = dataset::read_meta(&cfg.data.dir.join(dataset::META_FILE))?;
            (set, meta.schema)
        }
        None => {
            let (series, schema) = load_dataset(cfg)?;
            (build_examples(&series, &schema, &t.walk, t.seed)?, schema)
        }
    };
    if set.dim != schema.dim() {
        bail!("examples have {} features but the schema defines {}", set.dim, schema.dim());
    }
    let report = train(&set.examples, set.vocab.len(), &t)?;
    let mut outputs = Outputs::in_dir(out)?;
    let ck = Checkpoint::new(report.label.clone(), schema, report.params);
    ck.save(&outputs.track(out.join("model.json")))?;
    let mut csv = format!("{}\n", EpochStats::CSV_HEADER);
    for e in &report.epochs {
        writeln!(csv, "{e}")?;
    }
    outputs.write(out.join("epochs.csv"), csv)?;
    let summary = serde_json::json!({
        "label": report.label,
        "mode": report.mode,
        "epochs": report.epochs,
    });
    outputs.write(out.join("report.json"), serde_json::to_vec_pretty(&summary)?)?;
    outputs.commit();
    println!("trained {} model ({} epochs)", report.label, report.epochs.len());
    Ok(())
}

fn evaluate_cmd(cfg: &RunConfig, out: &Path) -> Result<()> {
    let (series, schema) = load_dataset(cfg)?;
    let ev = evaluate(&series, &schema, &cfg.train_config(), &cfg.eval)?;
    let mut metrics = format!("{}\n", MetricsRow::CSV_HEADER);
    let mut roc = String::from("model,fpr,tpr\n");
    for run in &ev.runs {
        writeln!(metrics, "{}", run.metrics.csv_line())?;
        roc.push_str(&roc_csv(&run.metrics.model, &roc_points(&run.scored)?));
    }
    let mut outputs = Outputs::in_dir(out)?;
    outputs.write(out.join("metrics.csv"), &metrics)?;
    outputs.write(out.join("roc.csv"), roc)?;
    outputs.commit();
    println!(
        "train days ..={}, test days {}..={}, {} train / {} test examples",
        ev.split.last_train_day,
        ev.split.first_test_day,
        ev.split.last_test_day,
        ev.train_examples,
        ev.test_examples
    );
    print!("{metrics}");
    Ok(())
}

fn predict(cfg: &RunConfig, out: &Path, checkpoint: &Path, edges: &Path) -> Result<()> {
    let ck = Checkpoint::load(checkpoint).with_context(|| format!("loading {}", checkpoint.display()))?;
    let queries = read_edge_queries(edges)?;
    let need_series = queries.iter().any(|q| q.z.is_none());
    let series = if need_series {
        cfg.require_dataset()?;
        Some(read_dataset(&cfg.data.dir, cfg.data.window)?.0)
    } else {
        None
    };
    let mut csv = String::from("player,game,day,score\n");
    for q in &queries {
        let z = match (&q.z, &series) {
            (Some(z), _) => z.clone(),
            (None, Some(s)) => {
                let edge = EdgeKey::new(q.player, q.game);
                edge_feature_vector(s, &ck.schema, edge, q.day)?.as_slice().to_vec()
            }
            (None, None) => unreachable!("series is loaded whenever a row lacks features"),
        };
        let score = ck.params.predict_churn(&z)?;
        writeln!(csv, "{},{},{},{}", q.player, q.game, q.day, score)?;
    }
    let mut outputs = Outputs::in_dir(out)?;
    outputs.write(out.join("scores.csv"), csv)?;
    outputs.commit();
    println!("scored {} edges", queries.len());
    Ok(())
}

fn walk_dump(cfg: &RunConfig, out: &Path, day: Option<Day>) -> Result<()> {
    let (series, schema) = load_dataset(cfg)?;
    let t = cfg.train_config();
    let opts = BuildOptions {
        contexts: true,
        temporal: false,
        days: day.map(|d| (d, d)),
    };
    let set = build_examples_with(&series, &schema, &t.walk, t.seed, opts)?;
    let mut csv = String::from("player,game,ctx_player,ctx_game\n");
    for ex in &set.examples {
        for &id in &ex.contexts {
            let c = set.vocab.pair(id).context("context id missing from vocabulary")?;
            writeln!(csv, "{},{},{},{}", ex.edge.player, ex.edge.game, c.player, c.game)?;
        }
    }
    let mut outputs = Outputs::in_dir(out)?;
    outputs.write(out.join("contexts.csv"), csv)?;
    outputs.commit();
    println!("{} edge-days sampled", set.examples.len());
    Ok(())
}

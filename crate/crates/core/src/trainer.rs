//! Example assembly and the co-train / alternate-train loops.

use std::collections::HashSet;
use std::fmt;
use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bigraph::{Day, EdgeKey, SnapshotSeries};
use crate::churnmodel::{
    objective_and_grads, LossBreakdown, LossWeights, ModelConfig, ModelGrads, ModelParams,
    TermWeights, TrainingExample,
};
use crate::ctxwalk::{sample_contexts, ContextVocabulary, NegativeSampler, WalkConfig, WalkGraph};
use crate::edgefeat::{edge_feature_vector, FeatureSchema};
use crate::error::{Error, Result};
use crate::netcore::{adam_step, AdamState, LrSchedule};
use crate::seeding;

const CONTEXT_STREAM: u64 = 1;
const NEGATIVE_STREAM: u64 = 2;
const SHUFFLE_STREAM: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TrainMode {
    /// One Adam step per batch on the full objective.
    #[default]
    CoTrain,
    /// Per epoch, a pass on `alpha L_U + gamma L_R` then a pass on
    /// `L_S + beta L_T + gamma L_R`.
    AlternateTrain,
}

impl std::str::FromStr for TrainMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cotrain" | "co_train" => Ok(TrainMode::CoTrain),
            "alternate" | "alternate_train" => Ok(TrainMode::AlternateTrain),
            other => Err(Error::Config(format!("unknown training mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub eta0: f64,
    pub mode: TrainMode,
    pub seed: u64,
    pub loss_weights: LossWeights,
    pub walk: WalkConfig,
    pub model: ModelConfig,
    /// Batch shards evaluated in parallel; 1 is bit-reproducible across machines.
    pub shards: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 8,
            batch_size: 1024,
            eta0: 0.017,
            mode: TrainMode::CoTrain,
            seed: 0,
            loss_weights: LossWeights::default(),
            walk: WalkConfig::default(),
            model: ModelConfig::default(),
            shards: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.shards == 0 {
            return Err(Error::Config("shards must be at least 1".into()));
        }
        LrSchedule::new(self.eta0)?;
        self.loss_weights.validate()?;
        self.walk.validate()
    }

    /// `RS` when only the supervised part of the objective is active, else `SS`.
    pub fn run_label(&self) -> &'static str {
        if self.loss_weights.alpha == 0.0 && self.loss_weights.beta == 0.0 {
            "RS"
        } else {
            "SS"
        }
    }
}

/// Examples with their shared context vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleSet {
    pub examples: Vec<TrainingExample>,
    pub vocab: ContextVocabulary,
    /// Edge-days dropped because a node had no features yet.
    pub skipped: usize,
    pub dim: usize,
}

impl ExampleSet {
    /// Examples dated in `[lo, hi]`.
    pub fn days_between(&self, lo: Day, hi: Day) -> Vec<TrainingExample> {
        self.examples
            .iter()
            .filter(|e| e.day >= lo && e.day <= hi)
            .cloned()
            .collect()
    }
}

/// What [`build_examples`] should attach beyond `z` and the label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildOptions {
    pub contexts: bool,
    pub temporal: bool,
    /// Inclusive range of example days; the whole series when `None`.
    pub days: Option<(Day, Day)>,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            contexts: true,
            temporal: true,
            days: None,
        }
    }
}

impl BuildOptions {
    /// Features and labels only, for scoring.
    pub fn scoring(days: Option<(Day, Day)>) -> Self {
        BuildOptions {
            contexts: false,
            temporal: false,
            days,
        }
    }
}

/// One example for every edge `(u, v)` on every day `i` of the series.
///
/// `z` is computed from data up to day `i`; the label window is
/// `[i + 2, i + 1 + T]`. Contexts come from walks on day `i`'s snapshot with
/// a random stream per `(day, edge)`, so the result does not depend on the
/// thread count.
pub fn build_examples(
    series: &SnapshotSeries,
    schema: &FeatureSchema,
    walk: &WalkConfig,
    seed: u64,
) -> Result<ExampleSet> {
    build_examples_with(series, schema, walk, seed, BuildOptions::default())
}

pub fn build_examples_with(
    series: &SnapshotSeries,
    schema: &FeatureSchema,
    walk: &WalkConfig,
    seed: u64,
    opts: BuildOptions,
) -> Result<ExampleSet> {
    schema.validate()?;
    walk.validate()?;
    let (lo, hi) = opts.days.unwrap_or((series.t0(), series.t_end() - 1));
    let days: Vec<Day> = (lo.max(series.t0())..=hi.min(series.t_end() - 1)).collect();
    let per_day: Vec<Result<DayExamples>> = days
        .par_iter()
        .map(|&day| day_examples(series, schema, walk, seed, day, opts))
        .collect();

    let mut vocab = ContextVocabulary::new();
    let mut examples = Vec::new();
    let mut skipped = 0;
    for r in per_day {
        let (list, skip) = r?;
        skipped += skip;
        for (mut ex, pairs) in list {
            ex.contexts = pairs.into_iter().map(|p| vocab.observe(p)).collect();
            examples.push(ex);
        }
    }
    if examples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if opts.contexts {
        attach_negatives(&mut examples, &vocab, walk, seed)?;
    }
    Ok(ExampleSet {
        examples,
        vocab,
        skipped,
        dim: schema.dim(),
    })
}

fn attach_negatives(
    examples: &mut [TrainingExample],
    vocab: &ContextVocabulary,
    walk: &WalkConfig,
    seed: u64,
) -> Result<()> {
    let sampler = match NegativeSampler::new(vocab, walk.negatives) {
        Ok(s) => s,
        // a single context id has nothing to contrast against
        Err(Error::VocabTooSmall(_)) => {
            for ex in examples.iter_mut() {
                ex.negatives = vec![Vec::new(); ex.contexts.len()];
            }
            return Ok(());
        }
        Err(e) => return Err(e),
    };
    examples.par_iter_mut().try_for_each(|ex| {
        let mut rng = seeding::stream(seed, &example_coords(NEGATIVE_STREAM, ex.day, ex.edge));
        ex.negatives = ex
            .contexts
            .iter()
            .map(|&c| sampler.sample(c, walk.negatives_per_context, &mut rng))
            .collect::<Result<_>>()?;
        Ok(())
    })
}

fn example_coords(stream: u64, day: Day, edge: EdgeKey) -> [u64; 4] {
    [stream, day as u64, edge.player as u64, edge.game as u64]
}

type DayExamples = (Vec<(TrainingExample, Vec<EdgeKey>)>, usize);

fn day_examples(
    series: &SnapshotSeries,
    schema: &FeatureSchema,
    walk: &WalkConfig,
    seed: u64,
    day: Day,
    opts: BuildOptions,
) -> Result<DayExamples> {
    let window = series.window() as Day;
    let mut edges = Vec::new();
    let mut zs = Vec::new();
    let mut skipped = 0;
    for edge in series.edges_at(day)? {
        match edge_feature_vector(series, schema, edge, day) {
            Ok(z) => {
                edges.push(edge);
                zs.push(z.as_slice().to_vec());
            }
            Err(Error::MissingFeatures { .. }) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    if edges.is_empty() {
        return Ok((Vec::new(), skipped));
    }
    let graph = if opts.contexts {
        Some(WalkGraph::from_edges(series, day, &edges, walk)?)
    } else {
        None
    };
    let mut out = Vec::with_capacity(edges.len());
    for (edge, z) in edges.into_iter().zip(zs) {
        let outcome = series.churn_label(edge, day)?;
        let mut ex = TrainingExample {
            edge,
            day,
            z,
            z_next: None,
            z_tuv: None,
            t_uv: None,
            churn: outcome.churn_target().unwrap_or(0.0),
            delta_next: outcome.delta,
            in_d: false,
            contexts: Vec::new(),
            negatives: Vec::new(),
            feature_day: day,
            label_window: (day + 2, day + 1 + window),
        };
        if opts.temporal && outcome.e_next != Some(false) && day < series.t_end() {
            attach_temporal(series, schema, &mut ex)?;
        }
        if ex.has_leakage() {
            return Err(Error::Contract(format!(
                "features of {edge} on day {day} overlap its label window"
            )));
        }
        let pairs = match &graph {
            Some(g) => {
                let mut rng = seeding::stream(seed, &example_coords(CONTEXT_STREAM, day, edge));
                sample_contexts(edge, g, walk, &mut rng)?
            }
            None => Vec::new(),
        };
        out.push((ex, pairs));
    }
    Ok((out, skipped))
}

/// Fills `z_next`, and `z_tuv` for censored examples; leaves `in_d` false
/// when the needed features or a determinable day are missing.
fn attach_temporal(
    series: &SnapshotSeries,
    schema: &FeatureSchema,
    ex: &mut TrainingExample,
) -> Result<()> {
    let z_next = match edge_feature_vector(series, schema, ex.edge, ex.day + 1) {
        Ok(z) => z.as_slice().to_vec(),
        Err(Error::MissingFeatures { .. }) => return Ok(()),
        Err(e) => return Err(e),
    };
    if !ex.delta_next {
        let t_uv = match series.last_observed_timestamp(ex.edge) {
            Ok(t) if t < ex.day => t,
            Ok(_) | Err(Error::NeverObserved(_)) => return Ok(()),
            Err(e) => return Err(e),
        };
        match edge_feature_vector(series, schema, ex.edge, t_uv) {
            Ok(z) => {
                ex.z_tuv = Some(z.as_slice().to_vec());
                ex.t_uv = Some(t_uv);
            }
            Err(Error::MissingFeatures { .. }) => return Ok(()),
            Err(e) => return Err(e),
        }
    }
    ex.z_next = Some(z_next);
    ex.in_d = true;
    Ok(())
}

/// Losses and learning rate for one epoch, averaged over its batches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub total: f64,
    pub supervised: f64,
    pub unsupervised: f64,
    pub temporal: f64,
    pub regularization: f64,
    pub lr: f64,
    pub wall_secs: f64,
}

impl EpochStats {
    pub const CSV_HEADER: &'static str = "epoch,loss_total,loss_s,loss_u,loss_t,loss_r,lr";
}

impl fmt::Display for EpochStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{},{},{}",
            self.epoch,
            self.total,
            self.supervised,
            self.unsupervised,
            self.temporal,
            self.regularization,
            self.lr
        )
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub label: String,
    pub mode: TrainMode,
    pub epochs: Vec<EpochStats>,
    pub params: ModelParams,
}

#[derive(Default)]
struct Running {
    sums: [f64; 5],
    batches: usize,
}

impl Running {
    fn add(&mut self, b: &LossBreakdown) {
        for (s, v) in self.sums.iter_mut().zip([
            b.total,
            b.supervised,
            b.unsupervised,
            b.temporal,
            b.regularization,
        ]) {
            *s += v;
        }
        self.batches += 1;
    }

    fn mean(&self, k: usize) -> f64 {
        if self.batches == 0 {
            0.0
        } else {
            self.sums[k] / self.batches as f64
        }
    }
}

/// Dense Adam for the network weights; row-sparse Adam for the context
/// rows, which only moves rows that received a gradient in this step.
struct Optimizer {
    state: AdamState,
    ctx_m: Vec<f64>,
    ctx_v: Vec<f64>,
}

impl Optimizer {
    fn new(params: &ModelParams) -> Self {
        let mut sizes: Vec<usize> = params.tensors().iter().map(|t| t.len()).collect();
        sizes.pop();
        Optimizer {
            state: AdamState::new(&sizes),
            ctx_m: vec![0.0; params.ctx.len()],
            ctx_v: vec![0.0; params.ctx.len()],
        }
    }

    fn step(&mut self, params: &mut ModelParams, grads: &ModelGrads, lr: f64) -> Result<()> {
        if grads.ctx.values().flatten().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("context gradient".into()));
        }
        let m = params.embed_dim();
        let mut g: Vec<&[f64]> = grads.embed.tensors();
        g.extend(grads.pred.tensors());
        g.push(&grads.w_s);
        {
            let mut p = params.embed.tensors_mut();
            p.extend(params.pred.tensors_mut());
            p.push(&mut params.w_s);
            adam_step(&mut p, &g, &mut self.state, lr)?;
        }
        let hp = self.state.hyper(lr);
        for (&id, row) in &grads.ctx {
            let r = id as usize * m..(id as usize + 1) * m;
            hp.apply(
                &mut params.ctx[r.clone()],
                row,
                &mut self.ctx_m[r.clone()],
                &mut self.ctx_v[r],
            );
        }
        Ok(())
    }
}

pub fn train(examples: &[TrainingExample], vocab_size: usize, cfg: &TrainConfig) -> Result<TrainReport> {
    train_with_progress(examples, vocab_size, cfg, &mut |_| {})
}

/// Trains from a fresh initialization, calling `progress` after every epoch.
pub fn train_with_progress(
    examples: &[TrainingExample],
    vocab_size: usize,
    cfg: &TrainConfig,
    progress: &mut dyn FnMut(&EpochStats),
) -> Result<TrainReport> {
    cfg.validate()?;
    let first = examples.first().ok_or(Error::EmptyDataset)?;
    let d = first.z.len();
    if let Some(bad) = examples.iter().find(|e| e.z.len() != d) {
        return Err(Error::Dimension {
            expected: d,
            got: bad.z.len(),
        });
    }
    let max_ctx = examples
        .iter()
        .flat_map(|e| e.contexts.iter().chain(e.negatives.iter().flatten()))
        .max();
    if let Some(&id) = max_ctx {
        if id as usize >= vocab_size {
            return Err(Error::ContextOutOfRange {
                id: id as usize,
                size: vocab_size,
            });
        }
    }
    let mut params = ModelParams::init(d, &cfg.model, vocab_size, cfg.seed)?;
    let schedule = LrSchedule::new(cfg.eta0)?;
    let w = &cfg.loss_weights;
    let unsup = TermWeights {
        supervised: 0.0,
        unsupervised: w.alpha,
        temporal: 0.0,
        regularization: w.gamma,
    };
    let sup = TermWeights {
        supervised: 1.0,
        unsupervised: 0.0,
        temporal: w.beta,
        regularization: w.gamma,
    };
    let full = TermWeights::from(w);
    let mut opt_main = Optimizer::new(&params);
    let mut opt_unsup = match cfg.mode {
        TrainMode::AlternateTrain if w.alpha > 0.0 => Some(Optimizer::new(&params)),
        _ => None,
    };

    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut stats = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let started = Instant::now();
        let lr = schedule.lr_at_epoch(epoch);
        let mut rng = seeding::stream(cfg.seed, &[SHUFFLE_STREAM, epoch as u64]);
        order.sort_unstable();
        order.shuffle(&mut rng);

        let mut run = Running::default();
        let mut unsup_run = Running::default();
        let run_pass = |params: &mut ModelParams,
                            opt: &mut Optimizer,
                            tw: &TermWeights,
                            acc: &mut Running|
         -> Result<()> {
            let mut batch = Vec::with_capacity(cfg.batch_size);
            for chunk in order.chunks(cfg.batch_size) {
                batch.clear();
                batch.extend(chunk.iter().map(|&i| examples[i].clone()));
                let (loss, grads) = objective_and_grads(params, &batch, w, tw, cfg.shards)
                    .map_err(|e| divergence(epoch, e))?;
                opt.step(params, &grads, lr).map_err(|e| divergence(epoch, e))?;
                acc.add(&loss);
            }
            Ok(())
        };
        match cfg.mode {
            TrainMode::CoTrain => run_pass(&mut params, &mut opt_main, &full, &mut run)?,
            TrainMode::AlternateTrain => {
                if let Some(opt) = opt_unsup.as_mut() {
                    run_pass(&mut params, opt, &unsup, &mut unsup_run)?;
                }
                run_pass(&mut params, &mut opt_main, &sup, &mut run)?;
            }
        }
        let (supervised, temporal, regularization) = (run.mean(1), run.mean(3), run.mean(4));
        let unsupervised = match cfg.mode {
            TrainMode::CoTrain => run.mean(2),
            TrainMode::AlternateTrain => unsup_run.mean(2),
        };
        let total = match cfg.mode {
            TrainMode::CoTrain => run.mean(0),
            TrainMode::AlternateTrain => {
                supervised + w.alpha * unsupervised + w.beta * temporal + w.gamma * regularization
            }
        };
        let s = EpochStats {
            epoch,
            total,
            supervised,
            unsupervised,
            temporal,
            regularization,
            lr,
            wall_secs: started.elapsed().as_secs_f64(),
        };
        progress(&s);
        stats.push(s);
    }
    Ok(TrainReport {
        label: cfg.run_label().to_string(),
        mode: cfg.mode,
        epochs: stats,
        params,
    })
}

fn divergence(epoch: usize, e: Error) -> Error {
    match e {
        Error::NonFinite(what) => Error::Divergence { epoch, what },
        other => other,
    }
}

/// Keeps only the examples whose edge is not in `withheld`.
pub fn without_edges(examples: &[TrainingExample], withheld: &HashSet<EdgeKey>) -> Vec<TrainingExample> {
    examples
        .iter()
        .filter(|e| !withheld.contains(&e.edge))
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bigraph::{NodeId, PlayRecord};
    use crate::edgefeat::FeatureVector;

    fn toy() -> SnapshotSeries {
        // days 1..5, T = 2
        let mut b = SnapshotSeries::builder(1, 5, 2);
        for (p, g, d) in [(0, 0, 2), (0, 0, 3), (1, 0, 2), (1, 1, 4), (0, 1, 5)] {
            b.play(PlayRecord {
                player: p,
                game: g,
                day: d,
            });
        }
        for p in 0..2 {
            b.features(NodeId::player(p), 1, FeatureVector::new(vec![1.0, p as f64]).unwrap());
        }
        for g in 0..2 {
            b.features(NodeId::game(g), 1, FeatureVector::new(vec![g as f64, 1.0]).unwrap());
        }
        b.build().unwrap()
    }

    fn schema() -> FeatureSchema {
        FeatureSchema::even_groups(2, 1).unwrap()
    }

    #[test]
    fn example_count_matches_edge_enumeration() {
        let s = toy();
        let set = build_examples(&s, &schema(), &WalkConfig::default(), 3).unwrap();
        let mut expected = 0;
        for day in 1..5 {
            for e in s.pairs() {
                let w = s.window() as Day;
                if s.play_days(e).iter().any(|&d| d > day && d <= day + w) {
                    expected += 1;
                }
            }
        }
        assert_eq!(set.examples.len(), expected);
        assert_eq!(set.skipped, 0);
    }

    #[test]
    fn no_example_reads_its_label_window() {
        let set = build_examples(&toy(), &schema(), &WalkConfig::default(), 3).unwrap();
        for ex in &set.examples {
            assert!(ex.feature_day < ex.label_window.0);
            assert_eq!(ex.label_window.1 - ex.label_window.0 + 1, 2);
        }
    }

    #[test]
    fn censored_examples_carry_anchor_features() {
        let set = build_examples(&toy(), &schema(), &WalkConfig::default(), 3).unwrap();
        let censored: Vec<_> = set.examples.iter().filter(|e| !e.delta_next).collect();
        assert!(!censored.is_empty());
        for ex in censored {
            if ex.in_d {
                assert!(ex.z_tuv.is_some() && ex.t_uv.unwrap() < ex.day);
            }
        }
        for ex in set.examples.iter().filter(|e| e.in_d) {
            assert!(ex.z_next.is_some());
        }
    }

    #[test]
    fn contexts_are_vocabulary_ids() {
        let set = build_examples(&toy(), &schema(), &WalkConfig::default(), 3).unwrap();
        for ex in &set.examples {
            assert_eq!(ex.contexts.len(), ex.negatives.len());
            for &c in ex.contexts.iter().chain(ex.negatives.iter().flatten()) {
                assert!((c as usize) < set.vocab.len());
            }
        }
    }

    #[test]
    fn building_is_deterministic() {
        let a = build_examples(&toy(), &schema(), &WalkConfig::default(), 3).unwrap();
        let b = build_examples(&toy(), &schema(), &WalkConfig::default(), 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn no_edges_is_an_empty_dataset() {
        let mut b = SnapshotSeries::builder(1, 5, 2);
        b.features(NodeId::player(0), 1, FeatureVector::new(vec![1.0]).unwrap());
        let s = b.build().unwrap();
        assert!(matches!(
            build_examples(&s, &FeatureSchema::even_groups(1, 1).unwrap(), &WalkConfig::default(), 0),
            Err(Error::EmptyDataset)
        ));
    }

    fn small_cfg() -> TrainConfig {
        TrainConfig {
            epochs: 3,
            batch_size: 4,
            eta0: 0.01,
            model: ModelConfig {
                embed_dims: vec![4],
                pred_dims: vec![3],
            },
            ..TrainConfig::default()
        }
    }

    #[test]
    fn training_is_deterministic_and_reports_every_epoch() {
        let set = build_examples(&toy(), &schema(), &WalkConfig::default(), 3).unwrap();
        let cfg = small_cfg();
        let a = train(&set.examples, set.vocab.len(), &cfg).unwrap();
        let b = train(&set.examples, set.vocab.len(), &cfg).unwrap();
        assert_eq!(a.epochs.len(), 3);
        for (x, y) in a.epochs.iter().zip(&b.epochs) {
            assert_eq!(x.total, y.total);
        }
        assert_eq!(a.params, b.params);
        assert_eq!(a.label, "SS");
    }

    #[test]
    fn alternate_equals_cotrain_without_auxiliary_terms() {
        let set = build_examples(&toy(), &schema(), &WalkConfig::default(), 3).unwrap();
        let mut cfg = small_cfg();
        cfg.loss_weights = cfg.loss_weights.supervised_only();
        let co = train(&set.examples, set.vocab.len(), &cfg).unwrap();
        cfg.mode = TrainMode::AlternateTrain;
        let alt = train(&set.examples, set.vocab.len(), &cfg).unwrap();
        assert_eq!(co.params, alt.params);
        assert_eq!(co.label, "RS");
    }

    #[test]
    fn progress_lines_are_csv() {
        let s = EpochStats {
            epoch: 2,
            total: 0.5,
            supervised: 0.25,
            unsupervised: 3.0,
            temporal: 0.0,
            regularization: 10.0,
            lr: 0.01,
            wall_secs: 1.0,
        };
        assert_eq!(s.to_string(), "2,0.5,0.25,3,0,10,0.01");
        assert_eq!(EpochStats::CSV_HEADER.split(',').count(), 7);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!("alternate".parse::<TrainMode>().unwrap(), TrainMode::AlternateTrain);
        assert!("sideways".parse::<TrainMode>().is_err());
    }
}

//! Chronological train/test evaluation of the SS, RS and LR models on one
//! series.

use serde::{Deserialize, Serialize};

use crate::bigraph::{Day, SnapshotSeries};
use crate::churnmodel::{ModelParams, TrainingExample};
use crate::edgefeat::FeatureSchema;
use crate::error::{Error, Result};
use crate::evalkit::{lr_baseline, score_examples, train_day_count, LrConfig, MetricsRow, ScoredExample};
use crate::trainer::{build_examples, build_examples_with, train, BuildOptions, EpochStats, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Leading share of example days used for training.
    pub train_fraction: f64,
    pub threshold: f64,
    pub lr: LrConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            train_fraction: 0.7,
            threshold: 0.5,
            lr: LrConfig::default(),
        }
    }
}

/// Day boundaries of a chronological split over example days `t0..t_end-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DaySplit {
    pub last_train_day: Day,
    pub first_test_day: Day,
    pub last_test_day: Day,
}

impl DaySplit {
    pub fn new(series: &SnapshotSeries, fraction: f64) -> Result<Self> {
        let n_days = (series.t_end() - series.t0()).max(0) as usize;
        let k = train_day_count(n_days, fraction)?;
        let last_train_day = series.t0() + k as Day - 1;
        Ok(DaySplit {
            last_train_day,
            first_test_day: last_train_day + 1,
            last_test_day: series.t_end() - 1,
        })
    }
}

/// Training examples drawn from the history as it was known on the last
/// training day, so no label reads a test-period play.
pub fn training_examples(
    series: &SnapshotSeries,
    schema: &FeatureSchema,
    split: &DaySplit,
    cfg: &TrainConfig,
) -> Result<crate::trainer::ExampleSet> {
    let known = series.truncated(split.last_train_day)?;
    let set = build_examples(&known, schema, &cfg.walk, cfg.seed)?;
    // a churn label needs its whole window observed
    if let Some(bad) = set
        .examples
        .iter()
        .find(|e| e.delta_next && e.label_window.1 > split.last_train_day && e.churn == 1.0)
    {
        return Err(Error::Contract(format!(
            "training label of {} on day {} reads past day {}",
            bad.edge, bad.day, split.last_train_day
        )));
    }
    Ok(set)
}

pub fn test_examples(
    series: &SnapshotSeries,
    schema: &FeatureSchema,
    split: &DaySplit,
) -> Result<Vec<TrainingExample>> {
    let opts = BuildOptions::scoring(Some((split.first_test_day, split.last_test_day)));
    let set = build_examples_with(series, schema, &Default::default(), 0, opts)?;
    Ok(set.examples)
}

#[derive(Debug, Clone)]
pub struct ModelRun {
    pub metrics: MetricsRow,
    pub scored: Vec<ScoredExample>,
    pub epochs: Vec<EpochStats>,
    pub params: Option<ModelParams>,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub split: DaySplit,
    pub train_examples: usize,
    pub test_examples: usize,
    pub runs: Vec<ModelRun>,
}

impl Evaluation {
    pub fn get(&self, model: &str) -> Option<&ModelRun> {
        self.runs.iter().find(|r| r.metrics.model == model)
    }
}

/// Trains SS (the configured objective), RS (`alpha = beta = 0`) and the LR
/// baseline on the training days and scores the test days.
pub fn evaluate(
    series: &SnapshotSeries,
    schema: &FeatureSchema,
    train_cfg: &TrainConfig,
    eval_cfg: &EvalConfig,
) -> Result<Evaluation> {
    let split = DaySplit::new(series, eval_cfg.train_fraction)?;
    let train_set = training_examples(series, schema, &split, train_cfg)?;
    let test = test_examples(series, schema, &split)?;
    if test.iter().any(|e| e.day <= split.last_train_day) {
        return Err(Error::Split("test example dated inside the training period".into()));
    }

    let mut runs = Vec::new();
    let mut variants = vec![train_cfg.clone()];
    if train_cfg.run_label() == "SS" {
        let mut rs = train_cfg.clone();
        rs.loss_weights = rs.loss_weights.supervised_only();
        variants.push(rs);
    }
    for cfg in variants {
        let report = train(&train_set.examples, train_set.vocab.len(), &cfg)?;
        let scored = score_examples(&report.params, &test)?;
        runs.push(ModelRun {
            metrics: MetricsRow::evaluate(&report.label, &scored, eval_cfg.threshold)?,
            scored,
            epochs: report.epochs,
            params: Some(report.params),
        });
    }
    let scored = lr_baseline(&train_set.examples, &test, &eval_cfg.lr)?;
    runs.push(ModelRun {
        metrics: MetricsRow::evaluate("LR", &scored, eval_cfg.threshold)?,
        scored,
        epochs: Vec::new(),
        params: None,
    });
    Ok(Evaluation {
        split,
        train_examples: train_set.examples.len(),
        test_examples: test.len(),
        runs,
    })
}

//! Chronological splits, ranking and threshold metrics, and the logistic
//! regression baseline.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bigraph::Day;
use crate::churnmodel::{sigmoid, ModelParams, TrainingExample};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredExample {
    pub score: f64,
    /// 1 for churn.
    pub label: u8,
    pub day: Day,
}

impl ScoredExample {
    pub fn new(score: f64, label: u8, day: Day) -> Result<Self> {
        if !score.is_finite() {
            return Err(Error::NonFinite(format!("score on day {day}")));
        }
        if label > 1 {
            return Err(Error::Contract(format!("label {label} is not 0 or 1")));
        }
        Ok(ScoredExample { score, label, day })
    }
}

/// Anything carrying the day it is filed under.
pub trait Dated {
    fn day(&self) -> Day;
}

impl Dated for TrainingExample {
    fn day(&self) -> Day {
        self.day
    }
}

impl Dated for ScoredExample {
    fn day(&self) -> Day {
        self.day
    }
}

/// Number of leading days that go to training: `ceil(fraction * n_days)`,
/// kept within `[1, n_days - 1]`.
pub fn train_day_count(n_days: usize, fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Split(format!("train fraction {fraction} must lie in (0, 1)")));
    }
    if n_days < 2 {
        return Err(Error::Split(format!("need at least 2 distinct days, got {n_days}")));
    }
    // tolerate round-off such as (2/3) * 9 = 6.000000000000001
    let k = (fraction * n_days as f64 - 1e-9).ceil() as usize;
    Ok(k.clamp(1, n_days - 1))
}

/// First `ceil(fraction * #days)` distinct days go to train, the rest to test.
pub fn chronological_split<T: Dated + Clone>(items: &[T], fraction: f64) -> Result<(Vec<T>, Vec<T>)> {
    let days: Vec<Day> = items
        .iter()
        .map(Dated::day)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let k = train_day_count(days.len(), fraction)?;
    let last_train = days[k - 1];
    let (train, test): (Vec<T>, Vec<T>) = items.iter().cloned().partition(|x| x.day() <= last_train);
    Ok((train, test))
}

/// Area under the ROC curve as the Mann-Whitney statistic with midranks.
pub fn auc(scored: &[ScoredExample]) -> Result<f64> {
    let pos = scored.iter().filter(|s| s.label == 1).count();
    let neg = scored.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMetric(format!(
            "AUC needs both classes ({pos} positives, {neg} negatives)"
        )));
    }
    let mut idx: Vec<usize> = (0..scored.len()).collect();
    idx.sort_by(|&a, &b| scored[a].score.total_cmp(&scored[b].score));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scored[idx[j + 1]].score == scored[idx[i]].score {
            j += 1;
        }
        // ranks are 1-based; ties share the mean rank
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            if scored[k].label == 1 {
                rank_sum += mid;
            }
        }
        i = j + 1;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// `(precision, recall)` for predicting churn when `score >= threshold`.
pub fn precision_recall(scored: &[ScoredExample], threshold: f64) -> Result<(f64, f64)> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Config(format!("threshold {threshold} must lie in (0, 1)")));
    }
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for s in scored {
        match (s.score >= threshold, s.label == 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            (false, false) => {}
        }
    }
    if tp + fneg == 0 {
        return Err(Error::UndefinedMetric("recall needs at least one churn label".into()));
    }
    let precision = if tp + fp == 0 {
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    Ok((precision, tp as f64 / (tp + fneg) as f64))
}

/// `(false positive rate, true positive rate)` at every distinct threshold,
/// from `(0, 0)` to `(1, 1)`.
pub fn roc_points(scored: &[ScoredExample]) -> Result<Vec<(f64, f64)>> {
    let pos = scored.iter().filter(|s| s.label == 1).count();
    let neg = scored.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMetric("ROC needs both classes".into()));
    }
    let mut sorted = scored.to_vec();
    sorted.sort_by(|a, b| b.score.total_cmp(&a.score));
    let mut pts = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    for (i, s) in sorted.iter().enumerate() {
        if s.label == 1 {
            tp += 1;
        } else {
            fp += 1;
        }
        let last_of_tie = i + 1 == sorted.len() || sorted[i + 1].score != s.score;
        if last_of_tie {
            pts.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
        }
    }
    Ok(pts)
}

pub fn roc_csv(model: &str, points: &[(f64, f64)]) -> String {
    let mut out = String::new();
    for (fpr, tpr) in points {
        let _ = writeln!(out, "{model},{fpr},{tpr}");
    }
    out
}

/// One `model,auc,recall,precision` row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub model: String,
    pub auc: f64,
    pub recall: f64,
    pub precision: f64,
}

impl MetricsRow {
    pub const CSV_HEADER: &'static str = "model,auc,recall,precision";

    pub fn evaluate(model: &str, scored: &[ScoredExample], threshold: f64) -> Result<Self> {
        let (precision, recall) = precision_recall(scored, threshold)?;
        Ok(MetricsRow {
            model: model.to_string(),
            auc: auc(scored)?,
            recall,
            precision,
        })
    }

    pub fn csv_line(&self) -> String {
        format!("{},{},{},{}", self.model, self.auc, self.recall, self.precision)
    }
}

/// Scores the uncensored examples of `test` with the trained model.
pub fn score_examples(params: &ModelParams, test: &[TrainingExample]) -> Result<Vec<ScoredExample>> {
    test.iter()
        .filter(|e| e.delta_next)
        .map(|e| ScoredExample::new(params.predict_churn(&e.z)?, e.churn as u8, e.day))
        .collect()
}

/// Fit settings for [`LogisticRegression`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LrConfig {
    /// Weight of `(1/2) ||w||^2` against the summed log loss.
    pub l2: f64,
    pub max_iter: usize,
    /// Stop when the gradient's max-norm falls below this.
    pub tol: f64,
}

impl Default for LrConfig {
    fn default() -> Self {
        LrConfig {
            l2: 1.0,
            max_iter: 5000,
            tol: 1e-6,
        }
    }
}

/// Logistic regression with an unpenalized intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl LogisticRegression {
    /// Minimizes `sum log-loss + (l2 / 2) ||w||^2` by gradient descent with
    /// a backtracking step.
    pub fn fit(x: &[Vec<f64>], y: &[u8], cfg: &LrConfig) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::EmptyDataset);
        }
        let pos = y.iter().filter(|&&v| v == 1).count();
        if pos == 0 || pos == y.len() {
            return Err(Error::UndefinedMetric(
                "logistic regression needs both classes in training".into(),
            ));
        }
        let d = x[0].len();
        if let Some(bad) = x.iter().find(|r| r.len() != d) {
            return Err(Error::Dimension {
                expected: d,
                got: bad.len(),
            });
        }
        let n = x.len() as f64;
        // optimize the per-example mean so the step size is scale free
        let lam = cfg.l2 / n;
        let objective = |w: &[f64], b: f64| -> f64 {
            let mut loss = 0.0;
            for (row, &t) in x.iter().zip(y) {
                let s = b + row.iter().zip(w).map(|(a, c)| a * c).sum::<f64>();
                // log(1 + e^s) - t s
                loss += softplus(s) - t as f64 * s;
            }
            loss / n + 0.5 * lam * w.iter().map(|v| v * v).sum::<f64>()
        };
        let mut w = vec![0.0; d];
        let mut b = 0.0;
        let mut step = 1.0;
        let mut f = objective(&w, b);
        for _ in 0..cfg.max_iter {
            let mut gw = vec![0.0; d];
            let mut gb = 0.0;
            for (row, &t) in x.iter().zip(y) {
                let s = b + row.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>();
                let r = sigmoid(s) - t as f64;
                for (g, a) in gw.iter_mut().zip(row) {
                    *g += r * a;
                }
                gb += r;
            }
            for (g, wi) in gw.iter_mut().zip(&w) {
                *g = *g / n + lam * wi;
            }
            gb /= n;
            let gmax = gw.iter().fold(gb.abs(), |m, g| m.max(g.abs()));
            if gmax < cfg.tol {
                break;
            }
            let gsq = gw.iter().map(|g| g * g).sum::<f64>() + gb * gb;
            step *= 2.0;
            loop {
                let w2: Vec<f64> = w.iter().zip(&gw).map(|(wi, g)| wi - step * g).collect();
                let b2 = b - step * gb;
                let f2 = objective(&w2, b2);
                if f2 <= f - 0.5 * step * gsq || step < 1e-12 {
                    w = w2;
                    b = b2;
                    f = f2;
                    break;
                }
                step /= 2.0;
            }
        }
        Ok(LogisticRegression { weights: w, intercept: b })
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        sigmoid(self.intercept + x.iter().zip(&self.weights).map(|(a, c)| a * c).sum::<f64>())
    }
}

fn softplus(s: f64) -> f64 {
    if s > 0.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}

/// Logistic regression on raw `z`, trained on the uncensored training
/// examples and scored on the uncensored test examples.
pub fn lr_baseline(
    train: &[TrainingExample],
    test: &[TrainingExample],
    cfg: &LrConfig,
) -> Result<Vec<ScoredExample>> {
    let labeled: Vec<&TrainingExample> = train.iter().filter(|e| e.delta_next).collect();
    if labeled.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let x: Vec<Vec<f64>> = labeled.iter().map(|e| e.z.clone()).collect();
    let y: Vec<u8> = labeled.iter().map(|e| e.churn as u8).collect();
    let model = LogisticRegression::fit(&x, &y, cfg)?;
    test.iter()
        .filter(|e| e.delta_next)
        .map(|e| ScoredExample::new(model.predict(&e.z), e.churn as u8, e.day))
        .collect()
}

//! Edge embedding `g`, churn predictor `f`, and the joint objective
//! `L = L_S + alpha * L_U + beta * L_T + gamma * L_R` with exact gradients.
//!
//! `g` is a ReLU stack over the raw edge features `z`; `f` is a second ReLU
//! stack on top of `g` followed by a logistic unit with weights `w_s`. The
//! context softmax has one weight row per context pair id.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bigraph::{Day, EdgeKey};
use crate::error::{Error, Result};
use crate::netcore::{add_into, DenseLayer, DenseStack, ForwardCache, StackGrads};
use crate::seeding;

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(sigmoid(x))` without overflow.
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// How the context likelihood is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ContextObjective {
    /// Logistic surrogate with sampled negatives.
    #[default]
    NegativeSampling,
    /// Exact softmax over the whole vocabulary (vocabularies up to 64).
    FullSoftmax,
}

pub const FULL_SOFTMAX_MAX_VOCAB: usize = 64;

/// How the unsupervised and temporal sums are reduced over a batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    /// Divide by the number of examples in the batch.
    #[default]
    Mean,
    Sum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Regularization weights for `W_e`, `b_e`, `W_s`, `b_s`, `w_s`.
    pub lambda: [f64; 5],
    pub reduction: Reduction,
    pub context: ContextObjective,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            alpha: 0.02,
            beta: 0.01,
            gamma: 1e-5,
            lambda: [1.0; 5],
            reduction: Reduction::Mean,
            context: ContextObjective::NegativeSampling,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.alpha, self.beta, self.gamma]
            .into_iter()
            .chain(self.lambda);
        for w in all {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::Config(format!("loss weight {w} must be non-negative")));
            }
        }
        Ok(())
    }

    /// Supervised-only variant (`alpha = beta = 0`).
    pub fn supervised_only(&self) -> LossWeights {
        LossWeights {
            alpha: 0.0,
            beta: 0.0,
            ..self.clone()
        }
    }
}

/// Coefficients of the four loss terms for one optimization pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermWeights {
    pub supervised: f64,
    pub unsupervised: f64,
    pub temporal: f64,
    pub regularization: f64,
}

impl From<&LossWeights> for TermWeights {
    fn from(w: &LossWeights) -> Self {
        TermWeights {
            supervised: 1.0,
            unsupervised: w.alpha,
            temporal: w.beta,
            regularization: w.gamma,
        }
    }
}

/// Layer widths. `embed_dims` ends with the embedding size `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub embed_dims: Vec<usize>,
    pub pred_dims: Vec<usize>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            embed_dims: vec![50],
            pred_dims: vec![50],
        }
    }
}

/// One `(edge, day)` instance with everything the losses need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub edge: EdgeKey,
    pub day: Day,
    /// `z` on `day`.
    pub z: Vec<f64>,
    /// `z` on `day + 1`, present when `in_d`.
    pub z_next: Option<Vec<f64>>,
    /// `z` on the edge's last determinable day, present for censored `in_d` examples.
    pub z_tuv: Option<Vec<f64>>,
    pub t_uv: Option<Day>,
    /// 1 for churn, 0 for retention; meaningless when `delta_next` is false.
    pub churn: f64,
    pub delta_next: bool,
    /// Edge exists on `day` and is not known to vanish on `day + 1`.
    pub in_d: bool,
    pub contexts: Vec<u32>,
    /// One list of negative ids per context.
    pub negatives: Vec<Vec<u32>>,
    /// Last day whose data entered `z`.
    pub feature_day: Day,
    /// Inclusive day range that decides the label.
    pub label_window: (Day, Day),
}

impl TrainingExample {
    /// Minimal example for tests and direct scoring.
    pub fn labeled(z: Vec<f64>, churn: bool) -> Self {
        TrainingExample {
            edge: EdgeKey::new(0, 0),
            day: 0,
            z,
            z_next: None,
            z_tuv: None,
            t_uv: None,
            churn: if churn { 1.0 } else { 0.0 },
            delta_next: true,
            in_d: false,
            contexts: Vec::new(),
            negatives: Vec::new(),
            feature_day: 0,
            label_window: (2, 2),
        }
    }

    pub fn has_leakage(&self) -> bool {
        self.feature_day >= self.label_window.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub embed: DenseStack,
    pub pred: DenseStack,
    pub w_s: Vec<f64>,
    /// Context softmax rows, `[vocab_size][m]` row-major.
    pub ctx: Vec<f64>,
    pub vocab_size: usize,
}

/// Gradients shaped like [`ModelParams`]; context rows are sparse.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrads {
    pub embed: StackGrads,
    pub pred: StackGrads,
    pub w_s: Vec<f64>,
    pub ctx: BTreeMap<u32, Vec<f64>>,
}

impl ModelGrads {
    pub fn zeros_like(p: &ModelParams) -> Self {
        ModelGrads {
            embed: StackGrads::zeros_like(&p.embed),
            pred: StackGrads::zeros_like(&p.pred),
            w_s: vec![0.0; p.w_s.len()],
            ctx: BTreeMap::new(),
        }
    }

    fn ctx_row(&mut self, id: u32, m: usize) -> &mut Vec<f64> {
        self.ctx.entry(id).or_insert_with(|| vec![0.0; m])
    }

    pub fn add_assign(&mut self, other: &ModelGrads) {
        self.embed.add_assign(&other.embed);
        self.pred.add_assign(&other.pred);
        add_into(&mut self.w_s, &other.w_s);
        for (&id, row) in &other.ctx {
            let m = row.len();
            add_into(self.ctx_row(id, m), row);
        }
    }

    pub fn ctx_dense(&self, vocab_size: usize, m: usize) -> Vec<f64> {
        let mut out = vec![0.0; vocab_size * m];
        for (&id, row) in &self.ctx {
            out[id as usize * m..(id as usize + 1) * m].copy_from_slice(row);
        }
        out
    }

    /// Every gradient entry in [`ModelParams::tensors`] order.
    pub fn flatten(&self, vocab_size: usize, m: usize) -> Vec<f64> {
        let mut out: Vec<f64> = self.embed.tensors().concat();
        out.extend(self.pred.tensors().concat());
        out.extend(&self.w_s);
        out.extend(self.ctx_dense(vocab_size, m));
        out
    }
}

impl ModelParams {
    /// Glorot-initialized parameters. Context rows come from a separate
    /// stream so the vocabulary size does not perturb the other weights.
    pub fn init(d: usize, cfg: &ModelConfig, vocab_size: usize, seed: u64) -> Result<Self> {
        if cfg.embed_dims.is_empty() || cfg.pred_dims.is_empty() {
            return Err(Error::Config(
                "model needs at least one embedding and one prediction layer".into(),
            ));
        }
        let mut rng = seeding::stream(seed, &[0x6d6f64656c]);
        let mut edims = vec![d];
        edims.extend(&cfg.embed_dims);
        let embed = DenseStack::glorot(&edims, &mut rng)?;
        let m = embed.output_dim();
        let mut pdims = vec![m];
        pdims.extend(&cfg.pred_dims);
        let pred = DenseStack::glorot(&pdims, &mut rng)?;
        let k = pred.output_dim();
        let ws_layer = DenseLayer::glorot(k, 1, &mut rng);
        let mut crng = seeding::stream(seed, &[0x637478]);
        let bound = (6.0 / (m + vocab_size.max(1)) as f64).sqrt();
        let ctx = (0..vocab_size * m)
            .map(|_| crng.random_range(-bound..=bound))
            .collect();
        Ok(ModelParams {
            embed,
            pred,
            w_s: ws_layer.weights,
            ctx,
            vocab_size,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.embed.input_dim()
    }

    pub fn embed_dim(&self) -> usize {
        self.embed.output_dim()
    }

    pub fn ctx_row(&self, id: u32) -> &[f64] {
        let m = self.embed_dim();
        &self.ctx[id as usize * m..(id as usize + 1) * m]
    }

    /// All parameter tensors: embedding stack, prediction stack, `w_s`, context rows.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut t = self.embed.tensors();
        t.extend(self.pred.tensors());
        t.push(&self.w_s);
        t.push(&self.ctx);
        t
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut t = self.embed.tensors_mut();
        t.extend(self.pred.tensors_mut());
        t.push(&mut self.w_s);
        t.push(&mut self.ctx);
        t
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.tensors().concat()
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        let mut off = 0;
        for t in self.tensors_mut() {
            t.copy_from_slice(&flat[off..off + t.len()]);
            off += t.len();
        }
    }

    /// `g(z)`; depends only on `z`.
    pub fn embed_edge(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.embed.apply(z)
    }

    /// `f(g(z)) = sigmoid(h_s(g(z)) . w_s)`.
    pub fn predict_churn(&self, z: &[f64]) -> Result<f64> {
        let e = self.embed.apply(z)?;
        self.churn_from_embedding(&e)
    }

    pub fn churn_from_embedding(&self, e: &[f64]) -> Result<f64> {
        let h = self.pred.apply(e)?;
        Ok(sigmoid(dot(&h, &self.w_s)))
    }

    fn check_ctx(&self, id: u32) -> Result<()> {
        if id as usize >= self.vocab_size {
            return Err(Error::ContextOutOfRange {
                id: id as usize,
                size: self.vocab_size,
            });
        }
        Ok(())
    }

    /// Log-likelihood of context `ctx` given an embedding: the negative
    /// sampling estimate `log s(e.w_c) + sum log s(-e.w_n)`, or the exact
    /// log-softmax in [`ContextObjective::FullSoftmax`] mode.
    pub fn context_log_likelihood(
        &self,
        embedding: &[f64],
        ctx: u32,
        negatives: &[u32],
        mode: ContextObjective,
    ) -> Result<f64> {
        self.check_ctx(ctx)?;
        match mode {
            ContextObjective::NegativeSampling => {
                let mut ll = log_sigmoid(dot(embedding, self.ctx_row(ctx)));
                for &n in negatives {
                    self.check_ctx(n)?;
                    ll += log_sigmoid(-dot(embedding, self.ctx_row(n)));
                }
                Ok(ll)
            }
            ContextObjective::FullSoftmax => {
                let scores = self.all_scores(embedding)?;
                Ok(scores[ctx as usize] - log_sum_exp(&scores))
            }
        }
    }

    fn all_scores(&self, embedding: &[f64]) -> Result<Vec<f64>> {
        if self.vocab_size > FULL_SOFTMAX_MAX_VOCAB {
            return Err(Error::Config(format!(
                "full softmax limited to {FULL_SOFTMAX_MAX_VOCAB} contexts, vocabulary has {}",
                self.vocab_size
            )));
        }
        Ok((0..self.vocab_size as u32)
            .map(|j| dot(embedding, self.ctx_row(j)))
            .collect())
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let mx = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    mx + xs.iter().map(|x| (x - mx).exp()).sum::<f64>().ln()
}

/// Supervised loss and the number of uncensored terms it averages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupervisedLoss {
    pub value: f64,
    pub terms: usize,
}

impl SupervisedLoss {
    /// True when every example in the batch was censored.
    pub fn all_censored(&self) -> bool {
        self.terms == 0
    }
}

/// `(1/L) * sum over uncensored examples of (churn - f(g(z)))^2`.
pub fn supervised_loss(params: &ModelParams, batch: &[TrainingExample]) -> Result<SupervisedLoss> {
    if batch.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut sum = 0.0;
    let mut terms = 0;
    for ex in batch.iter().filter(|e| e.delta_next) {
        let r = ex.churn - params.predict_churn(&ex.z)?;
        sum += r * r;
        terms += 1;
    }
    let value = if terms == 0 { 0.0 } else { sum / terms as f64 };
    Ok(SupervisedLoss { value, terms })
}

fn reduce(sum: f64, n: usize, reduction: Reduction) -> f64 {
    match reduction {
        Reduction::Sum => sum,
        Reduction::Mean if n > 0 => sum / n as f64,
        Reduction::Mean => 0.0,
    }
}

/// `-sum of context log-likelihoods` over uncensored examples.
pub fn unsupervised_loss(
    params: &ModelParams,
    batch: &[TrainingExample],
    weights: &LossWeights,
) -> Result<f64> {
    let mut sum = 0.0;
    for ex in batch.iter().filter(|e| e.delta_next && !e.contexts.is_empty()) {
        let e = params.embed_edge(&ex.z)?;
        for (k, &c) in ex.contexts.iter().enumerate() {
            let neg = ex.negatives.get(k).map(Vec::as_slice).unwrap_or(&[]);
            sum -= params.context_log_likelihood(&e, c, neg, weights.context)?;
        }
    }
    Ok(reduce(sum, batch.len(), weights.reduction))
}

/// Temporal smoothness plus the hinge on decreasing churn probability.
pub fn temporal_loss(
    params: &ModelParams,
    batch: &[TrainingExample],
    weights: &LossWeights,
) -> Result<f64> {
    let mut sum = 0.0;
    for ex in batch.iter().filter(|e| e.in_d) {
        let z_next = ex.z_next.as_ref().ok_or_else(|| missing("z_next", ex))?;
        let e0 = params.embed_edge(&ex.z)?;
        let e1 = params.embed_edge(z_next)?;
        let f_ref = if ex.delta_next {
            params.churn_from_embedding(&e0)?
        } else {
            let z_tuv = ex.z_tuv.as_ref().ok_or_else(|| missing("z_tuv", ex))?;
            params.predict_churn(z_tuv)?
        };
        let f1 = params.churn_from_embedding(&e1)?;
        sum += temporal_term(&e0, &e1, f_ref, f1);
    }
    Ok(reduce(sum, batch.len(), weights.reduction))
}

/// One example's temporal penalty `||e_next - e|| + max(0, f_ref - f_next)`.
pub fn temporal_term(e: &[f64], e_next: &[f64], f_ref: f64, f_next: f64) -> f64 {
    let dist = e_next
        .iter()
        .zip(e)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    dist + (f_ref - f_next).max(0.0)
}

fn missing(what: &str, ex: &TrainingExample) -> Error {
    Error::Contract(format!(
        "example {} on day {} is in D but has no {what}",
        ex.edge, ex.day
    ))
}

/// Weighted squared L2 norms of embedding and prediction weights; context
/// rows are not regularized.
pub fn regularization_loss(params: &ModelParams, weights: &LossWeights) -> f64 {
    let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    let l = &weights.lambda;
    let mut r = 0.0;
    for layer in &params.embed.layers {
        r += l[0] * sq(&layer.weights) + l[1] * sq(&layer.bias);
    }
    for layer in &params.pred.layers {
        r += l[2] * sq(&layer.weights) + l[3] * sq(&layer.bias);
    }
    r + l[4] * sq(&params.w_s)
}

fn regularization_grads(params: &ModelParams, weights: &LossWeights, scale: f64, g: &mut ModelGrads) {
    let l = &weights.lambda;
    for (k, layer) in params.embed.layers.iter().enumerate() {
        for (gi, w) in g.embed.weights[k].iter_mut().zip(&layer.weights) {
            *gi += scale * 2.0 * l[0] * w;
        }
        for (gi, b) in g.embed.bias[k].iter_mut().zip(&layer.bias) {
            *gi += scale * 2.0 * l[1] * b;
        }
    }
    for (k, layer) in params.pred.layers.iter().enumerate() {
        for (gi, w) in g.pred.weights[k].iter_mut().zip(&layer.weights) {
            *gi += scale * 2.0 * l[2] * w;
        }
        for (gi, b) in g.pred.bias[k].iter_mut().zip(&layer.bias) {
            *gi += scale * 2.0 * l[3] * b;
        }
    }
    for (gi, w) in g.w_s.iter_mut().zip(&params.w_s) {
        *gi += scale * 2.0 * l[4] * w;
    }
}

/// Values of each term of the objective on one batch.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub supervised: f64,
    pub unsupervised: f64,
    pub temporal: f64,
    pub regularization: f64,
    /// Uncensored examples behind `supervised`.
    pub supervised_terms: usize,
}

/// Forward pass through both stacks with everything backprop needs.
struct Eval {
    e: Vec<f64>,
    cache_e: ForwardCache,
    h: Vec<f64>,
    cache_p: ForwardCache,
    f: f64,
    d_f: f64,
    d_e: Vec<f64>,
}

impl Eval {
    fn new(params: &ModelParams, z: &[f64], need_pred: bool) -> Result<Self> {
        let (e, cache_e) = params.embed.forward(z)?;
        let m = e.len();
        let (h, cache_p, f) = if need_pred {
            let (h, cache_p) = params.pred.forward(&e)?;
            let f = sigmoid(dot(&h, &params.w_s));
            (h, cache_p, f)
        } else {
            (Vec::new(), ForwardCache::default(), f64::NAN)
        };
        Ok(Eval {
            e,
            cache_e,
            h,
            cache_p,
            f,
            d_f: 0.0,
            d_e: vec![0.0; m],
        })
    }

    fn backprop(mut self, params: &ModelParams, g: &mut ModelGrads) -> Result<()> {
        if self.d_f != 0.0 {
            let ds = self.d_f * self.f * (1.0 - self.f);
            for (gw, h) in g.w_s.iter_mut().zip(&self.h) {
                *gw += ds * h;
            }
            let d_h: Vec<f64> = params.w_s.iter().map(|w| ds * w).collect();
            let d_e = params.pred.backward_into(&self.cache_p, &d_h, &mut g.pred)?;
            add_into(&mut self.d_e, &d_e);
        }
        if self.d_e.iter().any(|&x| x != 0.0) {
            params
                .embed
                .backward_into(&self.cache_e, &self.d_e, &mut g.embed)?;
        }
        Ok(())
    }
}

/// Per-shard partial sums.
struct Partial {
    s: f64,
    u: f64,
    t: f64,
    grads: ModelGrads,
}

struct Scales {
    s: f64,
    u: f64,
    t: f64,
}

fn shard_terms(
    params: &ModelParams,
    shard: &[TrainingExample],
    weights: &LossWeights,
    tw: &TermWeights,
    scales: &Scales,
) -> Result<Partial> {
    let m = params.embed_dim();
    let mut g = ModelGrads::zeros_like(params);
    let (mut s_sum, mut u_sum, mut t_sum) = (0.0, 0.0, 0.0);
    let want_s = tw.supervised != 0.0;
    let want_u = tw.unsupervised != 0.0;
    let want_t = tw.temporal != 0.0;
    for ex in shard {
        let use_t = want_t && ex.in_d;
        let use_u = want_u && ex.delta_next && !ex.contexts.is_empty();
        let use_s = want_s && ex.delta_next;
        if !(use_s || use_u || use_t) {
            continue;
        }
        let need_pred0 = use_s || (use_t && ex.delta_next);
        let mut main = Eval::new(params, &ex.z, need_pred0)?;

        if use_s {
            let r = ex.churn - main.f;
            s_sum += r * r;
            main.d_f += -2.0 * r * scales.s;
        }

        if use_u {
            let cu = scales.u;
            for (k, &c) in ex.contexts.iter().enumerate() {
                params.check_ctx(c)?;
                match weights.context {
                    ContextObjective::NegativeSampling => {
                        let neg = ex.negatives.get(k).map(Vec::as_slice).unwrap_or(&[]);
                        let sc = dot(&main.e, params.ctx_row(c));
                        u_sum -= log_sigmoid(sc);
                        // d/dsc of -log s(sc) = -(1 - s(sc))
                        let a = -(1.0 - sigmoid(sc)) * cu;
                        for (de, w) in main.d_e.iter_mut().zip(params.ctx_row(c)) {
                            *de += a * w;
                        }
                        for (gw, ev) in g.ctx_row(c, m).iter_mut().zip(&main.e) {
                            *gw += a * ev;
                        }
                        for &n in neg {
                            params.check_ctx(n)?;
                            let sn = dot(&main.e, params.ctx_row(n));
                            u_sum -= log_sigmoid(-sn);
                            let b = sigmoid(sn) * cu;
                            for (de, w) in main.d_e.iter_mut().zip(params.ctx_row(n)) {
                                *de += b * w;
                            }
                            for (gw, ev) in g.ctx_row(n, m).iter_mut().zip(&main.e) {
                                *gw += b * ev;
                            }
                        }
                    }
                    ContextObjective::FullSoftmax => {
                        let scores = params.all_scores(&main.e)?;
                        let lse = log_sum_exp(&scores);
                        u_sum -= scores[c as usize] - lse;
                        for (j, &sj) in scores.iter().enumerate() {
                            let p = (sj - lse).exp() - if j == c as usize { 1.0 } else { 0.0 };
                            let a = p * cu;
                            for (de, w) in main.d_e.iter_mut().zip(params.ctx_row(j as u32)) {
                                *de += a * w;
                            }
                            for (gw, ev) in g.ctx_row(j as u32, m).iter_mut().zip(&main.e) {
                                *gw += a * ev;
                            }
                        }
                    }
                }
            }
        }

        if use_t {
            let z_next = ex.z_next.as_ref().ok_or_else(|| missing("z_next", ex))?;
            let mut next = Eval::new(params, z_next, true)?;
            let ct = scales.t;
            let diff: Vec<f64> = next.e.iter().zip(&main.e).map(|(a, b)| a - b).collect();
            let norm = diff.iter().map(|x| x * x).sum::<f64>().sqrt();
            t_sum += norm;
            if norm > 0.0 {
                for ((dn, dm), dv) in next.d_e.iter_mut().zip(main.d_e.iter_mut()).zip(&diff) {
                    *dn += ct * dv / norm;
                    *dm -= ct * dv / norm;
                }
            }
            if ex.delta_next {
                let hinge = main.f - next.f;
                if hinge > 0.0 {
                    t_sum += hinge;
                    main.d_f += ct;
                    next.d_f -= ct;
                }
                next.backprop(params, &mut g)?;
            } else {
                let z_tuv = ex.z_tuv.as_ref().ok_or_else(|| missing("z_tuv", ex))?;
                let mut anchor = Eval::new(params, z_tuv, true)?;
                let hinge = anchor.f - next.f;
                if hinge > 0.0 {
                    t_sum += hinge;
                    anchor.d_f += ct;
                    next.d_f -= ct;
                }
                next.backprop(params, &mut g)?;
                anchor.backprop(params, &mut g)?;
            }
        }
        main.backprop(params, &mut g)?;
    }
    Ok(Partial {
        s: s_sum,
        u: u_sum,
        t: t_sum,
        grads: g,
    })
}

/// Objective with per-term coefficients and its gradient, evaluated over
/// `shards` contiguous slices of the batch and reduced in slice order.
pub fn objective_and_grads(
    params: &ModelParams,
    batch: &[TrainingExample],
    weights: &LossWeights,
    tw: &TermWeights,
    shards: usize,
) -> Result<(LossBreakdown, ModelGrads)> {
    if batch.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let terms = batch.iter().filter(|e| e.delta_next).count();
    let n = batch.len();
    let per_batch = match weights.reduction {
        Reduction::Mean => 1.0 / n as f64,
        Reduction::Sum => 1.0,
    };
    let scales = Scales {
        s: if terms > 0 { tw.supervised / terms as f64 } else { 0.0 },
        u: tw.unsupervised * per_batch,
        t: tw.temporal * per_batch,
    };
    let shards = shards.clamp(1, n);
    let chunk = n.div_ceil(shards);
    let partials: Vec<Result<Partial>> = if shards == 1 {
        vec![shard_terms(params, batch, weights, tw, &scales)]
    } else {
        batch
            .par_chunks(chunk)
            .map(|c| shard_terms(params, c, weights, tw, &scales))
            .collect()
    };
    let mut grads = ModelGrads::zeros_like(params);
    let (mut s, mut u, mut t) = (0.0, 0.0, 0.0);
    for p in partials {
        let p = p?;
        s += p.s;
        u += p.u;
        t += p.t;
        grads.add_assign(&p.grads);
    }
    let supervised = if terms > 0 { s / terms as f64 } else { 0.0 };
    let unsupervised = u * per_batch;
    let temporal = t * per_batch;
    let regularization = regularization_loss(params, weights);
    if tw.regularization != 0.0 {
        regularization_grads(params, weights, tw.regularization, &mut grads);
    }
    let total = tw.supervised * supervised
        + tw.unsupervised * unsupervised
        + tw.temporal * temporal
        + tw.regularization * regularization;
    if !total.is_finite() {
        return Err(Error::NonFinite("total loss".into()));
    }
    Ok((
        LossBreakdown {
            total,
            supervised,
            unsupervised,
            temporal,
            regularization,
            supervised_terms: terms,
        },
        grads,
    ))
}

/// `L_S + alpha L_U + beta L_T + gamma L_R` and its exact gradient.
///
/// Only the terms with a non-zero coefficient are evaluated; the breakdown
/// reports 0 for the others.
pub fn total_loss_and_grads(
    params: &ModelParams,
    batch: &[TrainingExample],
    weights: &LossWeights,
) -> Result<(LossBreakdown, ModelGrads)> {
    objective_and_grads(params, batch, weights, &TermWeights::from(weights), 1)
}

/// Objective value only, every term evaluated regardless of its weight.
pub fn loss_breakdown(
    params: &ModelParams,
    batch: &[TrainingExample],
    weights: &LossWeights,
) -> Result<LossBreakdown> {
    let s = supervised_loss(params, batch)?;
    let u = unsupervised_loss(params, batch, weights)?;
    let t = temporal_loss(params, batch, weights)?;
    let r = regularization_loss(params, weights);
    let total = s.value + weights.alpha * u + weights.beta * t + weights.gamma * r;
    Ok(LossBreakdown {
        total,
        supervised: s.value,
        unsupervised: u,
        temporal: t,
        regularization: r,
        supervised_terms: s.terms,
    })
}

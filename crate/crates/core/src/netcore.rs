//! Dense ReLU stacks with exact backpropagation, Adam, the epoch decay
//! schedule, and a finite-difference gradient checker.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Affine layer `W x + b`, weights stored row-major as `[fan_out][fan_in]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub fan_in: usize,
    pub fan_out: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        DenseLayer {
            fan_in,
            fan_out,
            weights: vec![0.0; fan_in * fan_out],
            bias: vec![0.0; fan_out],
        }
    }

    /// Glorot-uniform weights, zero bias.
    pub fn glorot<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Self {
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let weights = (0..fan_in * fan_out)
            .map(|_| rng.random_range(-bound..=bound))
            .collect();
        DenseLayer {
            fan_in,
            fan_out,
            weights,
            bias: vec![0.0; fan_out],
        }
    }

    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for (row, b) in self.weights.chunks_exact(self.fan_in).zip(&self.bias) {
            out.push(b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>());
        }
    }
}

/// Layers applied in order, each followed by ReLU.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseStack {
    pub layers: Vec<DenseLayer>,
}

/// Activations kept by [`DenseStack::forward`] for the backward pass.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

impl ForwardCache {
    /// Pre-activations of every layer, first layer first.
    pub fn pre_activations(&self) -> &[Vec<f64>] {
        &self.pre
    }
}

/// Gradients shaped like a [`DenseStack`].
#[derive(Debug, Clone, PartialEq)]
pub struct StackGrads {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<Vec<f64>>,
}

impl StackGrads {
    pub fn zeros_like(stack: &DenseStack) -> Self {
        StackGrads {
            weights: stack.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            bias: stack.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &StackGrads) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            add_into(a, b);
        }
        for (a, b) in self.bias.iter_mut().zip(&other.bias) {
            add_into(a, b);
        }
    }

    pub fn scale(&mut self, c: f64) {
        for t in self.weights.iter_mut().chain(self.bias.iter_mut()) {
            t.iter_mut().for_each(|x| *x *= c);
        }
    }
}

pub(crate) fn add_into(a: &mut [f64], b: &[f64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

impl DenseStack {
    /// Glorot-initialized stack over the dimension chain `dims[0] -> ... -> dims[n]`.
    pub fn glorot<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::Config(format!(
                "layer dimensions {dims:?} need at least two positive entries"
            )));
        }
        Ok(DenseStack {
            layers: dims
                .windows(2)
                .map(|w| DenseLayer::glorot(w[0], w[1], rng))
                .collect(),
        })
    }

    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("a stack needs at least one layer".into()));
        }
        for (k, l) in layers.iter().enumerate() {
            if l.weights.len() != l.fan_in * l.fan_out || l.bias.len() != l.fan_out {
                return Err(Error::Config(format!("layer {k} has inconsistent shapes")));
            }
        }
        for w in layers.windows(2) {
            if w[0].fan_out != w[1].fan_in {
                return Err(Error::Dimension {
                    expected: w[0].fan_out,
                    got: w[1].fan_in,
                });
            }
        }
        Ok(DenseStack { layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].fan_out
    }

    /// Dimension chain, input first.
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(|l| l.fan_out))
            .collect()
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        if input.len() != self.input_dim() {
            return Err(Error::Dimension {
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        let mut cache = ForwardCache {
            inputs: Vec::with_capacity(self.layers.len()),
            pre: Vec::with_capacity(self.layers.len()),
        };
        let mut h = input.to_vec();
        for layer in &self.layers {
            let mut pre = Vec::with_capacity(layer.fan_out);
            layer.affine(&h, &mut pre);
            let next: Vec<f64> = pre.iter().map(|&x| x.max(0.0)).collect();
            cache.inputs.push(std::mem::replace(&mut h, next));
            cache.pre.push(pre);
        }
        Ok((h, cache))
    }

    /// Output only, no cache.
    pub fn apply(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_dim() {
            return Err(Error::Dimension {
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        let mut h = input.to_vec();
        let mut pre = Vec::new();
        for layer in &self.layers {
            layer.affine(&h, &mut pre);
            h.clear();
            h.extend(pre.iter().map(|&x| x.max(0.0)));
        }
        Ok(h)
    }

    /// Accumulates parameter gradients into `grads` and returns the gradient
    /// with respect to the input.
    pub fn backward_into(
        &self,
        cache: &ForwardCache,
        output_gradient: &[f64],
        grads: &mut StackGrads,
    ) -> Result<Vec<f64>> {
        if cache.pre.len() != self.layers.len() {
            return Err(Error::Contract("forward cache does not match stack".into()));
        }
        if output_gradient.len() != self.output_dim() {
            return Err(Error::Dimension {
                expected: self.output_dim(),
                got: output_gradient.len(),
            });
        }
        let mut upstream = output_gradient.to_vec();
        for (k, layer) in self.layers.iter().enumerate().rev() {
            let delta: Vec<f64> = upstream
                .iter()
                .zip(&cache.pre[k])
                .map(|(&g, &z)| if z > 0.0 { g } else { 0.0 })
                .collect();
            let x = &cache.inputs[k];
            let gw = &mut grads.weights[k];
            let mut down = vec![0.0; layer.fan_in];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                grads.bias[k][o] += d;
                let row = &layer.weights[o * layer.fan_in..(o + 1) * layer.fan_in];
                let grow = &mut gw[o * layer.fan_in..(o + 1) * layer.fan_in];
                for i in 0..layer.fan_in {
                    grow[i] += d * x[i];
                    down[i] += d * row[i];
                }
            }
            upstream = down;
        }
        Ok(upstream)
    }

    /// Fresh parameter gradients plus the input gradient.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        output_gradient: &[f64],
    ) -> Result<(StackGrads, Vec<f64>)> {
        let mut grads = StackGrads::zeros_like(self);
        let input_grad = self.backward_into(cache, output_gradient, &mut grads)?;
        Ok((grads, input_grad))
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }
}

impl StackGrads {
    /// Same order as [`DenseStack::tensors`].
    pub fn tensors(&self) -> Vec<&[f64]> {
        self.weights
            .iter()
            .zip(&self.bias)
            .flat_map(|(w, b)| [w.as_slice(), b.as_slice()])
            .collect()
    }
}

/// Adam moment estimates for a fixed list of tensors.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(sizes: &[usize]) -> Self {
        AdamState {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(
    params: &mut [&mut [f64]],
    grads: &[&[f64]],
    state: &mut AdamState,
    lr: f64,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::Contract(format!(
            "adam: {} parameter tensors, {} gradient tensors, {} moment tensors",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    for (k, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.len() != g.len() || p.len() != state.m[k].len() {
            return Err(Error::Dimension {
                expected: state.m[k].len(),
                got: g.len(),
            });
        }
        if g.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("gradient tensor {k}")));
        }
    }
    state.step += 1;
    let hp = state.hyper(lr);
    for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        hp.apply(p, g, &mut state.m[k], &mut state.v[k]);
    }
    Ok(())
}

/// Adam constants for one step, bias corrections included.
#[derive(Debug, Clone, Copy)]
pub struct AdamStep {
    beta1: f64,
    beta2: f64,
    eps: f64,
    c1: f64,
    c2: f64,
    lr: f64,
}

impl AdamState {
    /// Constants for the current step count.
    pub fn hyper(&self, lr: f64) -> AdamStep {
        let t = self.step as i32;
        AdamStep {
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
            c1: 1.0 - self.beta1.powi(t),
            c2: 1.0 - self.beta2.powi(t),
            lr,
        }
    }
}

impl AdamStep {
    /// Updates one slice of parameters and its moments in place.
    pub fn apply(&self, p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]) {
        for i in 0..p.len() {
            let gi = g[i];
            m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * gi;
            v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * gi * gi;
            let m_hat = m[i] / self.c1;
            let v_hat = v[i] / self.c2;
            p[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// `eta0 / (1 + k/2)` for epoch `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub eta0: f64,
}

impl LrSchedule {
    pub fn new(eta0: f64) -> Result<Self> {
        if !(eta0 > 0.0 && eta0.is_finite()) {
            return Err(Error::Config(format!("initial learning rate {eta0} must be positive")));
        }
        Ok(LrSchedule { eta0 })
    }

    pub fn lr_at_epoch(&self, k: usize) -> f64 {
        self.eta0 / (1.0 + k as f64 / 2.0)
    }
}

/// Worst relative error between an analytic gradient and central
/// differences of `f` around `x`.
///
/// The denominator is `max(|analytic|, |numeric|, floor)`; the floor keeps
/// round-off on near-zero components from dominating.
pub fn gradient_check(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x: &[f64],
    analytic: &[f64],
    h: f64,
    floor: f64,
) -> f64 {
    let mut probe = x.to_vec();
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = f(&probe);
        probe[i] = x[i] - h;
        let down = f(&probe);
        probe[i] = x[i];
        let numeric = (up - down) / (2.0 * h);
        let denom = analytic[i].abs().max(numeric.abs()).max(floor);
        worst = worst.max((analytic[i] - numeric).abs() / denom);
    }
    worst
}

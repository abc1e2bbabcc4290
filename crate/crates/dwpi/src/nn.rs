//! Minimal fully connected network with backpropagation. No external
//! numerical dependencies; f64 throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputHead {
    Linear,
    Softmax,
}

/// Network shape: `layer_sizes[0]` inputs through `layer_sizes.last()` outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
    pub output_head: OutputHead,
}

impl MlpConfig {
    pub fn new(layer_sizes: Vec<usize>) -> Self {
        MlpConfig {
            layer_sizes,
            activation: Activation::Relu,
            output_head: OutputHead::Linear,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 {
            return Err(Error::InvalidParameter {
                name: "layer_sizes",
                reason: "need at least input and output sizes".into(),
            });
        }
        if self.layer_sizes.iter().any(|&n| n == 0) {
            return Err(Error::InvalidParameter {
                name: "layer_sizes",
                reason: "all layer sizes must be >= 1".into(),
            });
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }
}

/// Feedforward network. Weight matrices are stored row-major,
/// `weights[l][o * n_in + i]` connecting input `i` to output `o` of layer `l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub config: MlpConfig,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

impl Mlp {
    /// Initialize with uniform draws in `±sqrt(6 / (n_in + n_out))` per layer.
    pub fn init(config: MlpConfig, rng: &mut RngStream) -> Result<Self> {
        config.validate()?;
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..config.layer_sizes.len() - 1 {
            let (n_in, n_out) = (config.layer_sizes[l], config.layer_sizes[l + 1]);
            let limit = (6.0 / (n_in + n_out) as f64).sqrt();
            let w = (0..n_in * n_out).map(|_| rng.range(-limit, limit)).collect();
            weights.push(w);
            biases.push(vec![0.0; n_out]);
        }
        Ok(Mlp { config, weights, biases })
    }

    /// All-zero parameters.
    pub fn zeros(config: MlpConfig) -> Result<Self> {
        config.validate()?;
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..config.layer_sizes.len() - 1 {
            let (n_in, n_out) = (config.layer_sizes[l], config.layer_sizes[l + 1]);
            weights.push(vec![0.0; n_in * n_out]);
            biases.push(vec![0.0; n_out]);
        }
        Ok(Mlp { config, weights, biases })
    }

    pub fn layer_count(&self) -> usize {
        self.weights.len()
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    pub fn set_weight(&mut self, layer: usize, out: usize, inp: usize, v: f64) {
        let n_in = self.config.layer_sizes[layer];
        self.weights[layer][out * n_in + inp] = v;
    }

    pub fn weight(&self, layer: usize, out: usize, inp: usize) -> f64 {
        let n_in = self.config.layer_sizes[layer];
        self.weights[layer][out * n_in + inp]
    }

    pub fn set_bias(&mut self, layer: usize, out: usize, v: f64) {
        self.biases[layer][out] = v;
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.config.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.config.input_dim(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { context: "network input" });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut cache = self.forward_cached(x);
        Ok(cache.layers.pop().unwrap())
    }

    fn forward_cached(&self, x: &[f64]) -> ForwardCache {
        let last = self.layer_count() - 1;
        let mut layers = vec![x.to_vec()];
        let mut pre_activations = Vec::new();
        for l in 0..self.weights.len() {
            let n_in = self.config.layer_sizes[l];
            let n_out = self.config.layer_sizes[l + 1];
            let input = layers.last().unwrap();
            let mut z = self.biases[l].clone();
            for o in 0..n_out {
                let row = &self.weights[l][o * n_in..(o + 1) * n_in];
                z[o] += dot(row, input);
            }
            let a = if l == last {
                match self.config.output_head {
                    OutputHead::Linear => z.clone(),
                    OutputHead::Softmax => softmax(&z),
                }
            } else {
                match self.config.activation {
                    Activation::Relu => z.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect(),
                    Activation::Linear => z.clone(),
                }
            };
            pre_activations.push(z);
            layers.push(a);
        }
        ForwardCache { layers, pre_activations }
    }

    /// Squared-error loss of a batch: mean over pairs of `Σ_j (y_j - t_j)²`.
    pub fn batch_loss(&self, batch: &[(Vec<f64>, Vec<f64>)]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let mut total = 0.0;
        for (x, t) in batch {
            let y = self.forward(x)?;
            if t.len() != y.len() {
                return Err(Error::DimensionMismatch { expected: y.len(), got: t.len() });
            }
            total += y.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        }
        Ok(total / batch.len() as f64)
    }

    /// One SGD step on the batch MSE. Returns the loss before the update.
    pub fn train_step(&mut self, batch: &[(Vec<f64>, Vec<f64>)], lr: f64) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        if lr <= 0.0 || !lr.is_finite() {
            return Err(Error::InvalidParameter {
                name: "lr",
                reason: format!("learning rate must be positive, got {lr}"),
            });
        }
        let (loss, grads) = self.loss_and_gradients(batch)?;
        for l in 0..self.weights.len() {
            for (w, g) in self.weights[l].iter_mut().zip(&grads.weights[l]) {
                *w -= lr * g;
            }
            for (b, g) in self.biases[l].iter_mut().zip(&grads.biases[l]) {
                *b -= lr * g;
            }
        }
        Ok(loss)
    }

    /// Batch loss plus analytic gradients of every parameter. Scratch
    /// buffers are reused across the batch to keep the hot loop
    /// allocation-free.
    fn loss_and_gradients(&self, batch: &[(Vec<f64>, Vec<f64>)]) -> Result<(f64, Gradients)> {
        let mut grads = Gradients {
            weights: self.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: self.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        };
        let mut total_loss = 0.0;
        let scale = 1.0 / batch.len() as f64;
        let last = self.layer_count() - 1;
        let mut acts: Vec<Vec<f64>> = self.config.layer_sizes.iter().map(|&n| vec![0.0; n]).collect();
        let mut pres: Vec<Vec<f64>> = self.config.layer_sizes[1..].iter().map(|&n| vec![0.0; n]).collect();
        let mut deltas: Vec<Vec<f64>> = self.config.layer_sizes[1..].iter().map(|&n| vec![0.0; n]).collect();

        for (x, t) in batch {
            self.check_input(x)?;
            if t.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { context: "training target" });
            }
            acts[0].copy_from_slice(x);
            for l in 0..=last {
                let n_in = self.config.layer_sizes[l];
                let n_out = self.config.layer_sizes[l + 1];
                let (before, after) = acts.split_at_mut(l + 1);
                let input = &before[l];
                let z = &mut pres[l];
                for o in 0..n_out {
                    let row = &self.weights[l][o * n_in..(o + 1) * n_in];
                    z[o] = self.biases[l][o] + dot(row, input);
                }
                let a = &mut after[0];
                if l == last {
                    match self.config.output_head {
                        OutputHead::Linear => a.copy_from_slice(z),
                        OutputHead::Softmax => a.copy_from_slice(&softmax(z)),
                    }
                } else {
                    match self.config.activation {
                        Activation::Relu => {
                            for (ai, &zi) in a.iter_mut().zip(z.iter()) {
                                *ai = if zi > 0.0 { zi } else { 0.0 };
                            }
                        }
                        Activation::Linear => a.copy_from_slice(z),
                    }
                }
            }
            let y = &acts[last + 1];
            if t.len() != y.len() {
                return Err(Error::DimensionMismatch { expected: y.len(), got: t.len() });
            }
            total_loss += y.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();

            // Output delta dL/dz for this sample's loss Σ (y - t)².
            match self.config.output_head {
                OutputHead::Linear => {
                    for ((d, a), b) in deltas[last].iter_mut().zip(y).zip(t) {
                        *d = 2.0 * (a - b);
                    }
                }
                OutputHead::Softmax => {
                    let dot: f64 = y.iter().zip(t).map(|(yi, ti)| 2.0 * (yi - ti) * yi).sum();
                    for ((d, &yi), &ti) in deltas[last].iter_mut().zip(y).zip(t) {
                        *d = yi * (2.0 * (yi - ti) - dot);
                    }
                }
            }

            for l in (0..=last).rev() {
                let n_in = self.config.layer_sizes[l];
                let n_out = self.config.layer_sizes[l + 1];
                let input = &acts[l];
                let (lower, upper) = deltas.split_at_mut(l);
                let delta = &upper[0];
                for o in 0..n_out {
                    let d = delta[o] * scale;
                    grads.biases[l][o] += d;
                    let row = &mut grads.weights[l][o * n_in..(o + 1) * n_in];
                    for (ri, &ii) in row.iter_mut().zip(input.iter()) {
                        *ri += d * ii;
                    }
                }
                if l > 0 {
                    let prev = &mut lower[l - 1];
                    for p in prev.iter_mut() {
                        *p = 0.0;
                    }
                    for o in 0..n_out {
                        let row = &self.weights[l][o * n_in..(o + 1) * n_in];
                        let d = delta[o];
                        for (pi, &ri) in prev.iter_mut().zip(row.iter()) {
                            *pi += ri * d;
                        }
                    }
                    // Derivative of the hidden activation; ReLU' at 0 is 0.
                    match self.config.activation {
                        Activation::Relu => {
                            let z = &pres[l - 1];
                            for i in 0..n_in {
                                if z[i] <= 0.0 {
                                    prev[i] = 0.0;
                                }
                            }
                        }
                        Activation::Linear => {}
                    }
                }
            }
        }
        Ok((total_loss * scale, grads))
    }

    /// Max relative error between analytic and central-difference gradients
    /// on one (input, target) pair.
    ///
    /// Parameters whose ±epsilon perturbation flips a ReLU activation are not
    /// compared: the loss is not differentiable across the kink, so the
    /// central difference does not estimate the (sub)gradient there.
    pub fn gradient_check(&self, x: &[f64], target: &[f64], epsilon: f64) -> Result<f64> {
        if !(1e-7..=1e-3).contains(&epsilon) {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                reason: format!("epsilon must lie in [1e-7, 1e-3], got {epsilon}"),
            });
        }
        let batch = vec![(x.to_vec(), target.to_vec())];
        let (_, grads) = self.loss_and_gradients(&batch)?;
        let mut worst: f64 = 0.0;
        let mut probe = self.clone();
        for l in 0..self.weights.len() {
            for idx in 0..self.weights[l].len() + self.biases[l].len() {
                let read = |m: &Mlp| {
                    if idx < m.weights[l].len() {
                        m.weights[l][idx]
                    } else {
                        m.biases[l][idx - m.weights[l].len()]
                    }
                };
                let write = |m: &mut Mlp, v: f64| {
                    if idx < m.weights[l].len() {
                        m.weights[l][idx] = v;
                    } else {
                        let k = idx - m.weights[l].len();
                        m.biases[l][k] = v;
                    }
                };
                let orig = read(self);
                write(&mut probe, orig + epsilon);
                let plus_cache = probe.forward_cached(x);
                let loss_plus = sq_err(plus_cache.layers.last().unwrap(), target);
                write(&mut probe, orig - epsilon);
                let minus_cache = probe.forward_cached(x);
                let loss_minus = sq_err(minus_cache.layers.last().unwrap(), target);
                write(&mut probe, orig);

                if self.config.activation == Activation::Relu
                    && relu_pattern(&plus_cache) != relu_pattern(&minus_cache)
                {
                    continue;
                }
                let g_num = (loss_plus - loss_minus) / (2.0 * epsilon);
                let g_ana = if idx < grads.weights[l].len() {
                    grads.weights[l][idx]
                } else {
                    grads.biases[l][idx - grads.weights[l].len()]
                };
                let rel = (g_ana - g_num).abs() / g_num.abs().max(1.0);
                worst = worst.max(rel);
            }
        }
        Ok(worst)
    }
}

/// Unrolled dot product; fixed summation order keeps results deterministic.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let chunks = n / 4 * 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    let mut i = 0;
    while i < chunks {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
        i += 4;
    }
    let mut tail = 0.0;
    while i < n {
        tail += a[i] * b[i];
        i += 1;
    }
    ((s0 + s1) + (s2 + s3)) + tail
}

fn sq_err(y: &[f64], t: &[f64]) -> f64 {
    y.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn relu_pattern(cache: &ForwardCache) -> Vec<bool> {
    // Hidden pre-activations only; the output head has no kink.
    let hidden = cache.pre_activations.len().saturating_sub(1);
    cache.pre_activations[..hidden]
        .iter()
        .flat_map(|z| z.iter().map(|&v| v > 0.0))
        .collect()
}

/// Max-shifted softmax.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|&v| (v - m).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

struct ForwardCache {
    layers: Vec<Vec<f64>>,
    pre_activations: Vec<Vec<f64>>,
}

struct Gradients {
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

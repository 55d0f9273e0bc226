//! Minimal dense-network machinery shared by the semantic chain and the
//! learned nonlinear canceller.
//!
//! All trainable parameters of a model live in one flat `Vec<f64>`; layer
//! descriptors hold offsets into it. That layout makes the optimizer,
//! gradient clipping, finite-difference checking, and serialization all
//! trivial single-slice operations, and guarantees that "parameter blocks
//! in declaration order" means exactly the order the offsets were handed
//! out.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::rng::RngStream;

/// Elementwise nonlinearity applied after a dense layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Linear,
}

/// One dense layer's shape and its slot in the flat parameter vector
/// (weights row-major `[n_out x n_in]`, then biases).
#[derive(Clone, Copy, Debug)]
pub struct DenseSpec {
    pub n_in: usize,
    pub n_out: usize,
    pub w_off: usize,
    pub b_off: usize,
}

impl DenseSpec {
    pub fn param_count(&self) -> usize {
        self.n_in * self.n_out + self.n_out
    }
}

/// A multilayer perceptron described by offsets into a shared parameter
/// vector: hidden layers use `hidden_act`, the final layer `out_act`.
#[derive(Clone, Debug)]
pub struct MlpSpec {
    pub layers: Vec<DenseSpec>,
    pub hidden_act: Activation,
    pub out_act: Activation,
}

/// Per-layer activations recorded by a forward pass, consumed by
/// [`MlpSpec::backward`].
#[derive(Clone, Debug, Default)]
pub struct MlpCache {
    /// `inputs[l]` is the input to layer `l`; `inputs[len]` is the output.
    inputs: Vec<Vec<f64>>,
}

impl MlpCache {
    /// Activation vector entering layer `layer` (so `activation(0)` is the
    /// network input and `activation(n_layers)` the output).
    ///
    /// # Panics
    /// Panics if no forward pass has filled the cache that far.
    pub fn activation(&self, layer: usize) -> &[f64] {
        &self.inputs[layer]
    }
}

impl MlpSpec {
    /// Lay out an MLP with the given widths starting at `offset` in the
    /// parameter vector; returns the spec and the first offset past it.
    pub fn layout(widths: &[usize], hidden_act: Activation, out_act: Activation, mut offset: usize) -> (Self, usize) {
        assert!(widths.len() >= 2, "an MLP needs at least input and output widths");
        let mut layers = Vec::with_capacity(widths.len() - 1);
        for w in widths.windows(2) {
            let spec = DenseSpec {
                n_in: w[0],
                n_out: w[1],
                w_off: offset,
                b_off: offset + w[0] * w[1],
            };
            offset = spec.b_off + spec.n_out;
            layers.push(spec);
        }
        (
            Self {
                layers,
                hidden_act,
                out_act,
            },
            offset,
        )
    }

    pub fn n_in(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn n_out(&self) -> usize {
        self.layers[self.layers.len() - 1].n_out
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(DenseSpec::param_count).sum()
    }

    /// Uniform fan-scaled init: each layer's weights drawn from
    /// `U(-a, a)`, `a = sqrt(6 / (n_in + n_out))`, biases zero.
    pub fn init(&self, params: &mut [f64], rng: &mut RngStream) {
        for l in &self.layers {
            let a = math::sqrt(6.0 / (l.n_in + l.n_out) as f64);
            for w in &mut params[l.w_off..l.w_off + l.n_in * l.n_out] {
                *w = rng.uniform(-a, a);
            }
            for b in &mut params[l.b_off..l.b_off + l.n_out] {
                *b = 0.0;
            }
        }
    }

    fn act(&self, layer: usize) -> Activation {
        if layer + 1 == self.layers.len() {
            self.out_act
        } else {
            self.hidden_act
        }
    }

    /// Forward pass; when `cache` is given, records the per-layer inputs
    /// needed for a later backward pass.
    ///
    /// # Panics
    /// Panics if `x.len() != n_in()`.
    pub fn forward(&self, params: &[f64], x: &[f64], mut cache: Option<&mut MlpCache>) -> Vec<f64> {
        assert_eq!(x.len(), self.n_in(), "input width mismatch");
        if let Some(c) = cache.as_deref_mut() {
            c.inputs.clear();
            c.inputs.push(x.to_vec());
        }
        let mut cur = x.to_vec();
        for (li, l) in self.layers.iter().enumerate() {
            let mut next = vec![0.0; l.n_out];
            for (o, n) in next.iter_mut().enumerate() {
                let row = &params[l.w_off + o * l.n_in..l.w_off + (o + 1) * l.n_in];
                let mut acc = params[l.b_off + o];
                for (w, xi) in row.iter().zip(&cur) {
                    acc += w * xi;
                }
                *n = match self.act(li) {
                    Activation::Tanh => math::tanh(acc),
                    Activation::Linear => acc,
                };
            }
            cur = next;
            if let Some(c) = cache.as_deref_mut() {
                c.inputs.push(cur.clone());
            }
        }
        cur
    }

    /// Reverse-mode pass: given `d_out` = dL/d(output), accumulates
    /// parameter gradients into `grads` (same layout as `params`) and
    /// returns dL/d(input).
    ///
    /// # Panics
    /// Panics if the cache does not come from a forward pass of this spec.
    pub fn backward(&self, params: &[f64], cache: &MlpCache, d_out: &[f64], grads: &mut [f64]) -> Vec<f64> {
        assert_eq!(cache.inputs.len(), self.layers.len() + 1, "stale cache");
        assert_eq!(d_out.len(), self.n_out(), "output gradient width mismatch");
        let mut d_cur = d_out.to_vec();
        for (li, l) in self.layers.iter().enumerate().rev() {
            let x = &cache.inputs[li];
            let y = &cache.inputs[li + 1];
            // through the activation
            let d_pre: Vec<f64> = match self.act(li) {
                Activation::Tanh => d_cur.iter().zip(y).map(|(d, a)| d * (1.0 - a * a)).collect(),
                Activation::Linear => d_cur.clone(),
            };
            let mut d_x = vec![0.0; l.n_in];
            for (o, dp) in d_pre.iter().enumerate() {
                grads[l.b_off + o] += dp;
                let w_row = &params[l.w_off + o * l.n_in..l.w_off + (o + 1) * l.n_in];
                let g_row = &mut grads[l.w_off + o * l.n_in..l.w_off + (o + 1) * l.n_in];
                for i in 0..l.n_in {
                    g_row[i] += dp * x[i];
                    d_x[i] += w_row[i] * dp;
                }
            }
            d_cur = d_x;
        }
        d_cur
    }
}

/// SGD with classical momentum over a flat parameter vector.
#[derive(Clone, Debug)]
pub struct SgdMomentum {
    pub learning_rate: f64,
    pub momentum: f64,
    velocity: Vec<f64>,
}

impl SgdMomentum {
    pub fn new(learning_rate: f64, momentum: f64, n_params: usize) -> Self {
        assert!(learning_rate > 0.0, "learning rate must be positive");
        assert!((0.0..1.0).contains(&momentum), "momentum must be in [0, 1)");
        Self {
            learning_rate,
            momentum,
            velocity: vec![0.0; n_params],
        }
    }

    /// `v <- momentum v + g; p <- p - lr v`
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.velocity.len());
        assert_eq!(grads.len(), self.velocity.len());
        for ((p, v), g) in params.iter_mut().zip(&mut self.velocity).zip(grads) {
            *v = self.momentum * *v + g;
            *p -= self.learning_rate * *v;
        }
    }
}

/// Scale `grads` down in place so its global L2 norm is at most
/// `max_norm`; returns the pre-clip norm.
pub fn clip_global_norm(grads: &mut [f64], max_norm: f64) -> f64 {
    let norm = math::sqrt(grads.iter().map(|g| g * g).sum::<f64>());
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        for g in grads.iter_mut() {
            *g *= s;
        }
    }
    norm
}

/// Central-difference check of an analytic gradient: for each index in
/// `indices`, perturbs `params[i]` by `±h`, evaluates `loss`, and compares
/// against `analytic[i]`. Returns the maximum relative error
/// `|fd - an| / max(|fd|, |an|, 1e-8)`.
pub fn finite_difference_check(
    params: &mut [f64],
    analytic: &[f64],
    indices: &[usize],
    h: f64,
    mut loss: impl FnMut(&[f64]) -> f64,
) -> f64 {
    let mut worst = 0.0f64;
    for &i in indices {
        let saved = params[i];
        params[i] = saved + h;
        let lp = loss(params);
        params[i] = saved - h;
        let lm = loss(params);
        params[i] = saved;
        let fd = (lp - lm) / (2.0 * h);
        let an = analytic[i];
        let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-8);
        if rel > worst {
            worst = rel;
        }
    }
    worst
}

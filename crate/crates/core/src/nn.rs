//! Dense tanh networks over a flat parameter vector.
//!
//! Parameters are stored layer by layer as `[W (out×in, row-major), b (out)]`.
//! The flat layout makes target tracking, optimizers and checkpoints simple
//! vector operations.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Activations recorded by a forward pass, needed for backpropagation.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    /// `layers[0]` is the input; the last entry is the output.
    layers: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.layers.last().map_or(&[], Vec::as_slice)
    }
}

impl Mlp {
    /// Xavier-uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output sizes");
        let count = Self::param_count(sizes);
        let mut params = Vec::with_capacity(count);
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            params.extend((0..fan_in * fan_out).map(|_| rng.random_range(-bound..bound)));
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        Self {
            sizes: sizes.to_vec(),
            params,
        }
    }

    pub fn from_params(sizes: &[usize], params: Vec<f64>) -> Self {
        assert_eq!(params.len(), Self::param_count(sizes), "parameter count");
        Self {
            sizes: sizes.to_vec(),
            params,
        }
    }

    pub fn param_count(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("sizes")
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        let mut trace = Trace::default();
        self.forward_traced(input, &mut trace);
        trace.layers.pop().unwrap_or_default()
    }

    pub fn forward_traced(&self, input: &[f64], trace: &mut Trace) {
        debug_assert_eq!(input.len(), self.sizes[0]);
        let depth = self.sizes.len() - 1;
        trace.layers.resize_with(depth + 1, Vec::new);
        trace.layers[0].clear();
        trace.layers[0].extend_from_slice(input);
        let mut offset = 0;
        for l in 0..depth {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let (w, rest) = self.params[offset..].split_at(n_in * n_out);
            let b = &rest[..n_out];
            offset += n_in * n_out + n_out;
            let (done, todo) = trace.layers.split_at_mut(l + 1);
            let x = &done[l];
            let out = &mut todo[0];
            out.clear();
            out.extend(w.chunks_exact(n_in).zip(b).map(|(row, &bias)| {
                let z = bias + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
                if l + 1 < depth {
                    z.tanh()
                } else {
                    z
                }
            }));
        }
    }

    /// Accumulates `∂L/∂params` into `grad_params` given `∂L/∂output` and
    /// returns `∂L/∂input`.
    pub fn backward(&self, trace: &Trace, grad_output: &[f64], grad_params: &mut [f64]) -> Vec<f64> {
        debug_assert_eq!(grad_params.len(), self.params.len());
        self.backprop(trace, grad_output, Some(grad_params))
    }

    /// `∂L/∂input` only.
    pub fn input_gradient(&self, trace: &Trace, grad_output: &[f64]) -> Vec<f64> {
        self.backprop(trace, grad_output, None)
    }

    fn backprop(
        &self,
        trace: &Trace,
        grad_output: &[f64],
        mut grad_params: Option<&mut [f64]>,
    ) -> Vec<f64> {
        let depth = self.sizes.len() - 1;
        let mut offsets = Vec::with_capacity(depth);
        let mut offset = 0;
        for l in 0..depth {
            offsets.push(offset);
            offset += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }
        let mut delta = grad_output.to_vec();
        for l in (0..depth).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            if l + 1 < depth {
                // tanh' = 1 - y²
                for (d, y) in delta.iter_mut().zip(&trace.layers[l + 1]) {
                    *d *= 1.0 - y * y;
                }
            }
            let off = offsets[l];
            let w = &self.params[off..off + n_in * n_out];
            if let Some(grads) = grad_params.as_deref_mut() {
                let x = &trace.layers[l];
                let (gw, gb) = grads[off..off + n_in * n_out + n_out].split_at_mut(n_in * n_out);
                for ((&d, b), gw_row) in delta.iter().zip(gb.iter_mut()).zip(gw.chunks_exact_mut(n_in)) {
                    *b += d;
                    if d != 0.0 {
                        for (g, &xv) in gw_row.iter_mut().zip(x) {
                            *g += d * xv;
                        }
                    }
                }
            }
            let mut grad_in = vec![0.0; n_in];
            for (&d, w_row) in delta.iter().zip(w.chunks_exact(n_in)) {
                if d != 0.0 {
                    for (gi, &wv) in grad_in.iter_mut().zip(w_row) {
                        *gi += d * wv;
                    }
                }
            }
            delta = grad_in;
        }
        delta
    }

    /// `self ← τ·online + (1 − τ)·self`.
    pub fn track(&mut self, online: &Mlp, tau: f64) {
        debug_assert_eq!(self.params.len(), online.params.len());
        if tau >= 1.0 {
            self.params.copy_from_slice(&online.params);
            return;
        }
        for (t, &o) in self.params.iter_mut().zip(&online.params) {
            *t = tau * o + (1.0 - tau) * *t;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// Gradient-descent step rule. Plain SGD applies `θ ← θ − lr·g` exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    first: Vec<f64>,
    second: Vec<f64>,
    steps: u64,
}

impl Optimizer {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    pub fn new(kind: OptimizerKind, lr: f64, dim: usize) -> Self {
        let moments = if kind == OptimizerKind::Adam { dim } else { 0 };
        Self {
            kind,
            lr,
            first: vec![0.0; moments],
            second: vec![0.0; moments],
            steps: 0,
        }
    }

    pub fn learning_rate(&self) -> f64 {
        self.lr
    }

    /// Descends along `grad`.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        debug_assert_eq!(params.len(), grad.len());
        self.steps += 1;
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= self.lr * g;
                }
            }
            OptimizerKind::Adam => {
                let t = self.steps as i32;
                let c1 = 1.0 - Self::BETA1.powi(t);
                let c2 = 1.0 - Self::BETA2.powi(t);
                for (((p, &g), m), v) in params
                    .iter_mut()
                    .zip(grad)
                    .zip(self.first.iter_mut())
                    .zip(self.second.iter_mut())
                {
                    *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
                    *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
                    *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
                }
            }
        }
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Index of the largest value; the first one wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

//! Fully connected ReLU networks: model, forward pass, reverse-mode gradients,
//! training and checkpoints.
//!
//! Networks operate on flat row-major vectors. A [`Frame`] optionally maps
//! matrices into the network's native coordinates: inputs are
//! `(A − input_center)/scale` and predictions are `output_center + scale·y`.
//! Without a frame the network consumes and emits raw matrix entries.

mod checkpoint;
mod data;
mod eval;
mod schedule;
mod train;

use rand::distr::{Distribution, Uniform};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub use checkpoint::{
    load_checkpoint, parse_checkpoint, reference_model, save_checkpoint, to_checkpoint_json, REFERENCE_CHECKPOINT,
};
pub use data::{normalized_frame, prepare, resolve_region, run_training, test_seed, Prepared, TrainRun};
pub use eval::{avg_abs_error, ConstantPredictor, Predictor};
pub use schedule::{lr_at, WarmRestart};
pub use train::{train, TrainConfig, TrainData, TRAIN_CONFIG_KEYS};

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    /// `out_dim × in_dim`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Layer {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
        }
    }

    /// Fan-in uniform init: every weight and bias in `±1/sqrt(in_dim)`.
    pub fn uniform<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (in_dim as f64).sqrt();
        let dist = Uniform::new_inclusive(-bound, bound).unwrap();
        Layer {
            in_dim,
            out_dim,
            weights: (0..in_dim * out_dim).map(|_| dist.sample(rng)).collect(),
            bias: (0..out_dim).map(|_| dist.sample(rng)).collect(),
        }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.weights[r * self.in_dim..(r + 1) * self.in_dim]
    }

    /// `out = W·x + b`
    pub fn affine_into(&self, x: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            *o = self.bias[r] + dot(self.row(r), x);
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Affine change of coordinates between matrices and network vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub input_center: Matrix,
    pub output_center: Matrix,
    pub scale: f64,
}

impl Frame {
    pub fn new(input_center: Matrix, output_center: Matrix, scale: f64) -> Result<Self> {
        if input_center.n() != output_center.n() {
            return Err(Error::DimensionMismatch {
                expected: input_center.n(),
                got: output_center.n(),
            });
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidArgument(format!("frame scale must be > 0, got {scale}")));
        }
        Ok(Frame {
            input_center,
            output_center,
            scale,
        })
    }

    pub fn n(&self) -> usize {
        self.input_center.n()
    }

    pub fn encode(&self, a: &Matrix) -> Vec<f64> {
        a.as_slice()
            .iter()
            .zip(self.input_center.as_slice())
            .map(|(x, c)| (x - c) / self.scale)
            .collect()
    }

    pub fn decode(&self, y: &[f64]) -> Matrix {
        let data = y
            .iter()
            .zip(self.output_center.as_slice())
            .map(|(v, c)| c + self.scale * v)
            .collect();
        Matrix::from_flat(self.n(), data).expect("frame dims checked")
    }

    /// Target vector for a label matrix (inverse of [`Frame::decode`]).
    pub fn encode_label(&self, label: &Matrix) -> Vec<f64> {
        label
            .as_slice()
            .iter()
            .zip(self.output_center.as_slice())
            .map(|(x, c)| (x - c) / self.scale)
            .collect()
    }
}

/// Stack of fully connected layers; ReLU after every layer but the last.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub layers: Vec<Layer>,
    pub frame: Option<Frame>,
}

impl MlpModel {
    pub fn new(layers: Vec<Layer>, frame: Option<Frame>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidArgument("model needs at least one layer".into()));
        }
        for (i, w) in layers.windows(2).enumerate() {
            if w[0].out_dim != w[1].in_dim {
                return Err(Error::schema(
                    format!("layers[{}].in", i + 1),
                    format!(
                        "expected {} to chain from previous layer, got {}",
                        w[0].out_dim, w[1].in_dim
                    ),
                ));
            }
        }
        for (i, l) in layers.iter().enumerate() {
            if l.weights.len() != l.in_dim * l.out_dim || l.bias.len() != l.out_dim {
                return Err(Error::schema(format!("layers[{i}]"), "parameter shape mismatch"));
            }
            if l.weights.iter().chain(&l.bias).any(|x| !x.is_finite()) {
                return Err(Error::schema(format!("layers[{i}]"), "non-finite parameter"));
            }
        }
        let model = MlpModel { layers, frame };
        if let Some(f) = &model.frame {
            let nn = f.n() * f.n();
            if model.input_dim() != nn || model.output_dim() != nn {
                return Err(Error::schema("frame", "frame size does not match model dims"));
            }
        }
        Ok(model)
    }

    /// Seeded fan-in uniform initialization for the given layer widths.
    pub fn init<R: Rng + ?Sized>(dims: &[usize], frame: Option<Frame>, rng: &mut R) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::InvalidArgument("need input and output dims".into()));
        }
        let layers = dims.windows(2).map(|w| Layer::uniform(w[0], w[1], rng)).collect();
        Self::new(layers, frame)
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1].iter().map(|l| l.out_dim).collect()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Checked forward pass.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        Ok(self.forward_unchecked(x))
    }

    pub fn forward_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let mut cur = x.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut next = vec![0.0; layer.out_dim];
            layer.affine_into(&cur, &mut next);
            if i != last {
                relu_in_place(&mut next);
            }
            cur = next;
        }
        cur
    }

    /// Flattened parameters: per layer, weights then bias.
    pub fn params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }

    pub fn set_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.num_params());
        let mut off = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&p[off..off + nw]);
            off += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&p[off..off + nb]);
            off += nb;
        }
    }

    /// Mean squared error over the batch and output entries, with gradients
    /// laid out like [`MlpModel::params`].
    pub fn loss_and_grads(&self, batch: &[(&[f64], &[f64])]) -> Result<(f64, Vec<f64>)> {
        if batch.is_empty() {
            return Err(Error::InvalidArgument("empty batch".into()));
        }
        for (x, y) in batch {
            if x.len() != self.input_dim() || y.len() != self.output_dim() {
                return Err(Error::DimensionMismatch {
                    expected: self.input_dim(),
                    got: x.len(),
                });
            }
        }
        let mut grads = vec![0.0; self.num_params()];
        let mut ws = Workspace::new(self);
        let mut loss = 0.0;
        for (x, y) in batch {
            loss += ws.accumulate(self, x, y, &mut grads);
        }
        let denom = (batch.len() * self.output_dim()) as f64;
        grads.iter_mut().for_each(|g| *g /= denom);
        Ok((loss / denom, grads))
    }
}

pub(crate) fn relu_in_place(v: &mut [f64]) {
    for x in v {
        if *x <= 0.0 {
            *x = 0.0;
        }
    }
}

/// Per-sample activation buffers reused across a batch.
pub(crate) struct Workspace {
    acts: Vec<Vec<f64>>,
    delta: Vec<Vec<f64>>,
    offsets: Vec<usize>,
}

impl Workspace {
    pub(crate) fn new(model: &MlpModel) -> Self {
        let mut acts = vec![vec![0.0; model.input_dim()]];
        let mut delta = Vec::new();
        let mut offsets = Vec::new();
        let mut off = 0;
        for l in &model.layers {
            acts.push(vec![0.0; l.out_dim]);
            delta.push(vec![0.0; l.out_dim]);
            offsets.push(off);
            off += l.weights.len() + l.bias.len();
        }
        Workspace { acts, delta, offsets }
    }

    /// Adds `d(sum of squared errors)/dθ` for one sample into `grads` and
    /// returns the sample's sum of squared errors.
    pub(crate) fn accumulate(&mut self, model: &MlpModel, x: &[f64], y: &[f64], grads: &mut [f64]) -> f64 {
        let last = model.layers.len() - 1;
        self.acts[0].copy_from_slice(x);
        for (i, layer) in model.layers.iter().enumerate() {
            let (prev, next) = self.acts.split_at_mut(i + 1);
            layer.affine_into(&prev[i], &mut next[0]);
            if i != last {
                relu_in_place(&mut next[0]);
            }
        }
        let mut sse = 0.0;
        for ((d, o), t) in self.delta[last].iter_mut().zip(&self.acts[last + 1]).zip(y) {
            let e = o - t;
            sse += e * e;
            *d = 2.0 * e;
        }
        for i in (0..=last).rev() {
            let layer = &model.layers[i];
            let off = self.offsets[i];
            let input = &self.acts[i];
            let (gw, gb) = grads[off..off + layer.weights.len() + layer.out_dim].split_at_mut(layer.weights.len());
            for r in 0..layer.out_dim {
                let d = self.delta[i][r];
                if d == 0.0 {
                    continue;
                }
                gb[r] += d;
                for (g, a) in gw[r * layer.in_dim..(r + 1) * layer.in_dim].iter_mut().zip(input) {
                    *g += d * a;
                }
            }
            if i > 0 {
                let (lower, upper) = self.delta.split_at_mut(i);
                let below = &mut lower[i - 1];
                for (c, b) in below.iter_mut().enumerate() {
                    // ReLU subgradient is 0 at exactly 0.
                    if self.acts[i][c] <= 0.0 {
                        *b = 0.0;
                        continue;
                    }
                    *b = (0..layer.out_dim)
                        .map(|r| upper[0][r] * layer.weights[r * layer.in_dim + c])
                        .sum();
                }
            }
        }
        sse
    }
}

//! Three-layer GCN encoder with a linear score layer, trained on margin
//! triplet loss with exact hand-derived gradients and Adam.
//!
//! Node features are rows of a learned label-embedding table. Each layer
//! computes `h' = ReLU(N̂ h W)` (no bias), the graph embedding is the mean of
//! the last layer's node rows, and a pair is scored as
//! `sigmoid(w · [h_x; h_user] + b)`.

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

mod adam;
mod backward;
mod checkpoint;
mod forward;

pub use adam::{adam_step, AdamState};
pub use backward::{accumulate_triplet, backward_triplet, TripletStep};
pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint};
pub use forward::{forward_graph, ForwardTrace};

pub const N_LAYERS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Hidden width D of every layer.
    pub dim: usize,
    /// Triplet margin γ.
    pub margin: f64,
    pub batch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Maximum number of epochs.
    pub epochs: usize,
    /// Early stopping: epochs without validation improvement.
    pub patience: usize,
    /// Fraction of samples held out for validation (by id hash).
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dim: 256,
            margin: 0.5,
            batch_size: 2048,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            epochs: 100,
            patience: 5,
            val_fraction: 0.05,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.dim < 1 {
            return bad("dim must be >= 1");
        }
        if !(self.margin > 0.0) {
            return bad("margin must be > 0");
        }
        if self.batch_size < 1 {
            return bad("batch_size must be >= 1");
        }
        if !(self.lr > 0.0) || !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("need lr > 0 and betas in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return bad("val_fraction must be in [0, 1)");
        }
        Ok(())
    }
}

/// All learnable tensors. Also used as the gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnParams {
    /// |V| × D label embeddings (input node features).
    pub embed: Array2<f64>,
    /// D × D layer weights.
    pub layers: [Array2<f64>; N_LAYERS],
    /// 2D score weights over `[h_x; h_user]`.
    pub score_w: Array1<f64>,
    pub score_b: f64,
}

pub type Gradients = GcnParams;

fn uniform<R: Rng + ?Sized>(rng: &mut R, shape: (usize, usize), bound: f64) -> Array2<f64> {
    Array2::from_shape_simple_fn(shape, || rng.random_range(-bound..bound))
}

impl GcnParams {
    /// Uniform(-1, 1) embeddings and Glorot-uniform weights; zero bias.
    pub fn init<R: Rng + ?Sized>(vocab_size: usize, dim: usize, rng: &mut R) -> Self {
        let embed = uniform(rng, (vocab_size, dim), 1.0);
        let glorot = (6.0 / (2 * dim) as f64).sqrt();
        let layers = std::array::from_fn(|_| uniform(rng, (dim, dim), glorot));
        let bound = (6.0 / (2 * dim + 1) as f64).sqrt();
        let score_w = Array1::from_shape_simple_fn(2 * dim, || rng.random_range(-bound..bound));
        Self {
            embed,
            layers,
            score_w,
            score_b: 0.0,
        }
    }

    pub fn zeros(vocab_size: usize, dim: usize) -> Self {
        Self {
            embed: Array2::zeros((vocab_size, dim)),
            layers: std::array::from_fn(|_| Array2::zeros((dim, dim))),
            score_w: Array1::zeros(2 * dim),
            score_b: 0.0,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.vocab_size(), self.dim())
    }

    pub fn vocab_size(&self) -> usize {
        self.embed.nrows()
    }

    pub fn dim(&self) -> usize {
        self.embed.ncols()
    }

    pub fn n_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Flat views in a fixed order: embed, layer1..3, score_w, score_b.
    pub fn tensors(&self) -> [&[f64]; 6] {
        fn flat(a: &Array2<f64>) -> &[f64] {
            a.as_slice().expect("standard layout")
        }
        [
            flat(&self.embed),
            flat(&self.layers[0]),
            flat(&self.layers[1]),
            flat(&self.layers[2]),
            self.score_w.as_slice().expect("standard layout"),
            std::slice::from_ref(&self.score_b),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 6] {
        let [l0, l1, l2] = &mut self.layers;
        [
            self.embed.as_slice_mut().expect("standard layout"),
            l0.as_slice_mut().expect("standard layout"),
            l1.as_slice_mut().expect("standard layout"),
            l2.as_slice_mut().expect("standard layout"),
            self.score_w.as_slice_mut().expect("standard layout"),
            std::slice::from_mut(&mut self.score_b),
        ]
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.embed.dim() == other.embed.dim()
            && self.layers.iter().zip(&other.layers).all(|(a, b)| a.dim() == b.dim())
            && self.score_w.len() == other.score_w.len()
    }

    pub fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "parameter sets differ: |V|={} D={} vs |V|={} D={}",
                self.vocab_size(),
                self.dim(),
                other.vocab_size(),
                other.dim()
            )))
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            for x in t {
                *x *= factor;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }

    pub fn max_abs(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|t| t.iter())
            .fold(0.0, |m, x| m.max(x.abs()))
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `sigmoid(w · [h_x; h_user] + b)`
pub fn score_pair(p: &GcnParams, h_x: ArrayView1<f64>, h_user: ArrayView1<f64>) -> f64 {
    let d = p.dim();
    let w = p.score_w.view();
    let z = w.slice(ndarray::s![..d]).dot(&h_x) + w.slice(ndarray::s![d..]).dot(&h_user) + p.score_b;
    sigmoid(z)
}

/// `max(0, score_neg - score_pos + margin)`
pub fn triplet_loss(score_pos: f64, score_neg: f64, margin: f64) -> f64 {
    (score_neg - score_pos + margin).max(0.0)
}

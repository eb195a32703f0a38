//! Fully-connected classifier on scattering features: FC layers with ReLU
//! between them, softmax cross-entropy loss, and mini-batch SGD with
//! momentum.
//!
//! Layer `l` computes `y = x W + b` with `W` stored row-major as
//! `inputs x outputs`.

mod io;

pub use io::{load_model, save_model, MODEL_MAGIC, MODEL_VERSION};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Hidden widths used when none are configured.
pub const DEFAULT_HIDDEN: [usize; 2] = [64, 16];

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    dims: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    seed: u64,
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(Error::InvalidConfig(format!(
            "MLP dims must list at least input and output widths, all >= 1 (got {dims:?})"
        )));
    }
    Ok(())
}

impl MlpModel {
    /// Weights uniform in `+-sqrt(6 / (fan_in + fan_out))`, biases zero.
    pub fn new_seeded(dims: &[usize], seed: u64) -> Result<Self> {
        check_dims(dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::with_capacity(dims.len() - 1);
        let mut biases = Vec::with_capacity(dims.len() - 1);
        for pair in dims.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            weights.push((0..fan_in * fan_out).map(|_| rng.random_range(-limit..limit)).collect());
            biases.push(vec![0.0; fan_out]);
        }
        Ok(MlpModel { dims: dims.to_vec(), weights, biases, seed })
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        check_dims(dims)?;
        Ok(MlpModel {
            dims: dims.to_vec(),
            weights: dims.windows(2).map(|p| vec![0.0; p[0] * p[1]]).collect(),
            biases: dims.windows(2).map(|p| vec![0.0; p[1]]).collect(),
            seed: 0,
        })
    }

    /// Builds a model from explicit parameters, checking every shape.
    pub fn from_parts(dims: Vec<usize>, weights: Vec<Vec<f64>>, biases: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        check_dims(&dims)?;
        let layers = dims.len() - 1;
        if weights.len() != layers || biases.len() != layers {
            return Err(Error::InvalidConfig(format!(
                "{layers} layers need {layers} weight matrices and bias vectors"
            )));
        }
        for (l, pair) in dims.windows(2).enumerate() {
            if weights[l].len() != pair[0] * pair[1] {
                return Err(Error::DimensionMismatch { expected: pair[0] * pair[1], actual: weights[l].len() });
            }
            if biases[l].len() != pair[1] {
                return Err(Error::DimensionMismatch { expected: pair[1], actual: biases[l].len() });
            }
        }
        if weights.iter().chain(&biases).flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("non-finite parameter".into()));
        }
        Ok(MlpModel { dims, weights, biases, seed })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_len(&self) -> usize {
        self.dims[0]
    }

    pub fn classes(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn layers(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn weights(&self, layer: usize) -> &[f64] {
        &self.weights[layer]
    }

    pub fn weights_mut(&mut self, layer: usize) -> &mut [f64] {
        &mut self.weights[layer]
    }

    pub fn biases(&self, layer: usize) -> &[f64] {
        &self.biases[layer]
    }

    pub fn biases_mut(&mut self, layer: usize) -> &mut [f64] {
        &mut self.biases[layer]
    }

    fn check_input(&self, features: &[f64]) -> Result<()> {
        if features.len() != self.input_len() {
            return Err(Error::DimensionMismatch { expected: self.input_len(), actual: features.len() });
        }
        Ok(())
    }

    /// Pre-activations of every layer.
    fn trace(&self, features: &[f64]) -> Vec<Vec<f64>> {
        let mut pre: Vec<Vec<f64>> = Vec::with_capacity(self.layers());
        for l in 0..self.layers() {
            let z = match pre.last() {
                None => affine(features, &self.weights[l], &self.biases[l]),
                Some(prev) => affine(&relu(prev), &self.weights[l], &self.biases[l]),
            };
            pre.push(z);
        }
        pre
    }

    /// Class scores (logits).
    pub fn forward(&self, features: &[f64]) -> Result<Vec<f64>> {
        self.check_input(features)?;
        let mut x = affine(features, &self.weights[0], &self.biases[0]);
        for l in 1..self.layers() {
            relu_in_place(&mut x);
            x = affine(&x, &self.weights[l], &self.biases[l]);
        }
        Ok(x)
    }

    /// Index of the highest score; ties go to the lowest index.
    pub fn predict(&self, features: &[f64]) -> Result<usize> {
        Ok(argmax(&self.forward(features)?))
    }

    /// Softmax cross-entropy loss and its gradient for one sample.
    pub fn backward(&self, features: &[f64], target: usize) -> Result<(Gradients, f64)> {
        let mut grads = Gradients::zeros_like(self);
        let loss = self.accumulate(features, target, &mut grads)?;
        Ok((grads, loss))
    }

    /// Adds this sample's gradient into `grads` and returns its loss.
    fn accumulate(&self, features: &[f64], target: usize, grads: &mut Gradients) -> Result<f64> {
        self.check_input(features)?;
        if target >= self.classes() {
            return Err(Error::ClassOutOfRange { index: target, classes: self.classes() });
        }
        let pre = self.trace(features);
        let logits = pre.last().unwrap();
        let loss = softmax_cross_entropy(logits, target);
        let mut delta = softmax(logits);
        delta[target] -= 1.0;

        for l in (0..self.layers()).rev() {
            let act;
            let input: &[f64] = if l == 0 {
                features
            } else {
                act = relu(&pre[l - 1]);
                &act
            };
            let outs = self.dims[l + 1];
            let gw = &mut grads.weights[l];
            for (j, &a) in input.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let row = &mut gw[j * outs..(j + 1) * outs];
                for (g, d) in row.iter_mut().zip(&delta) {
                    *g += a * d;
                }
            }
            for (g, d) in grads.biases[l].iter_mut().zip(&delta) {
                *g += d;
            }
            if l > 0 {
                let w = &self.weights[l];
                let prev: Vec<f64> = pre[l - 1]
                    .iter()
                    .enumerate()
                    .map(|(j, &z)| {
                        if z > 0.0 {
                            w[j * outs..(j + 1) * outs].iter().zip(&delta).map(|(w, d)| w * d).sum()
                        } else {
                            0.0
                        }
                    })
                    .collect();
                delta = prev;
            }
        }
        Ok(loss)
    }

    /// 32-bit copy for inference.
    pub fn to_f32(&self) -> MlpF32 {
        MlpF32 {
            dims: self.dims.clone(),
            weights: self.weights.iter().map(|w| w.iter().map(|&v| v as f32).collect()).collect(),
            biases: self.biases.iter().map(|b| b.iter().map(|&v| v as f32).collect()).collect(),
        }
    }
}

fn affine(x: &[f64], w: &[f64], b: &[f64]) -> Vec<f64> {
    let outs = b.len();
    let mut y = b.to_vec();
    for (row, &xj) in w.chunks_exact(outs).zip(x) {
        for (yk, wk) in y.iter_mut().zip(row) {
            *yk += xj * wk;
        }
    }
    y
}

fn relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.max(0.0)).collect()
}

fn relu_in_place(x: &mut [f64]) {
    for v in x {
        *v = v.max(0.0);
    }
}

pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `logsumexp(scores) - scores[target]`
pub fn softmax_cross_entropy(scores: &[f64], target: usize) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
    lse - scores[target]
}

/// Parameter gradients, shaped like the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(model: &MlpModel) -> Self {
        Gradients {
            weights: model.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: model.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    fn fill_zero(&mut self) {
        for v in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            v.fill(0.0);
        }
    }

    fn scale(&mut self, s: f64) {
        for v in self.weights.iter_mut().chain(self.biases.iter_mut()).flatten() {
            *v *= s;
        }
    }
}

/// Mean loss and mean gradient over `batch` (indices into `data`),
/// accumulated in batch order.
pub fn batch_gradients(model: &MlpModel, data: &[Sample], batch: &[usize]) -> Result<(Gradients, f64)> {
    let mut grads = Gradients::zeros_like(model);
    let loss = batch_gradients_into(model, data, batch, &mut grads)?;
    Ok((grads, loss))
}

fn batch_gradients_into(model: &MlpModel, data: &[Sample], batch: &[usize], grads: &mut Gradients) -> Result<f64> {
    grads.fill_zero();
    let mut loss = 0.0;
    for &i in batch {
        let s = &data[i];
        loss += model.accumulate(&s.features, s.label, grads)?;
    }
    let inv = 1.0 / batch.len() as f64;
    grads.scale(inv);
    Ok(loss * inv)
}

/// A labelled feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Loss {
    #[default]
    SoftmaxCrossEntropy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Batches per epoch; `None` makes one full pass over the data.
    pub steps_per_epoch: Option<usize>,
    pub seed: u64,
    pub loss: Loss,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            momentum: 0.9,
            epochs: 200,
            batch_size: 32,
            steps_per_epoch: None,
            seed: 0,
            loss: Loss::SoftmaxCrossEntropy,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return bad(format!("learning rate {}", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum {} outside [0, 1)", self.momentum));
        }
        if self.epochs == 0 || self.batch_size == 0 || self.steps_per_epoch == Some(0) {
            return bad("epochs, batch_size and steps_per_epoch must be >= 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: MlpModel,
    /// Mean training loss of each epoch.
    pub loss_history: Vec<f64>,
}

/// The batches of one epoch: shuffle once, then cut consecutive batches,
/// wrapping around the permutation when more steps are requested than fit.
pub fn epoch_batches(rng: &mut ChaCha8Rng, n: usize, cfg: &TrainConfig) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let full = n.div_ceil(cfg.batch_size);
    let steps = cfg.steps_per_epoch.unwrap_or(full);
    (0..steps)
        .map(|s| {
            if cfg.steps_per_epoch.is_none() {
                order[s * cfg.batch_size..((s + 1) * cfg.batch_size).min(n)].to_vec()
            } else {
                (0..cfg.batch_size).map(|k| order[(s * cfg.batch_size + k) % n]).collect()
            }
        })
        .collect()
}

/// Mini-batch SGD with momentum: `v <- momentum * v - lr * grad`,
/// `param <- param + v`. Deterministic for a fixed seed and data order.
pub fn train(model: &MlpModel, data: &[Sample], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for s in data {
        model.check_input(&s.features)?;
        if s.label >= model.classes() {
            return Err(Error::ClassOutOfRange { index: s.label, classes: model.classes() });
        }
    }
    let mut model = model.clone();
    let mut velocity = Gradients::zeros_like(&model);
    let mut grads = Gradients::zeros_like(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut step = 0usize;
    for _ in 0..cfg.epochs {
        let batches = epoch_batches(&mut rng, data.len(), cfg);
        let mut epoch_loss = 0.0;
        for batch in &batches {
            let loss = batch_gradients_into(&model, data, batch, &mut grads)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { step });
            }
            epoch_loss += loss;
            let params = model.weights.iter_mut().chain(model.biases.iter_mut());
            let vels = velocity.weights.iter_mut().chain(velocity.biases.iter_mut());
            let gs = grads.weights.iter().chain(grads.biases.iter());
            for ((p, v), g) in params.zip(vels).zip(gs) {
                for ((p, v), g) in p.iter_mut().zip(v.iter_mut()).zip(g) {
                    *v = cfg.momentum * *v - cfg.learning_rate * g;
                    *p += *v;
                }
            }
            step += 1;
        }
        history.push(epoch_loss / batches.len() as f64);
    }
    Ok(TrainOutcome { model, loss_history: history })
}

/// Single-precision inference copy of an [`MlpModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct MlpF32 {
    dims: Vec<usize>,
    weights: Vec<Vec<f32>>,
    biases: Vec<Vec<f32>>,
}

impl MlpF32 {
    pub fn forward(&self, features: &[f32]) -> Result<Vec<f32>> {
        if features.len() != self.dims[0] {
            return Err(Error::DimensionMismatch { expected: self.dims[0], actual: features.len() });
        }
        let mut x = features.to_vec();
        for l in 0..self.weights.len() {
            if l > 0 {
                for v in x.iter_mut() {
                    *v = v.max(0.0);
                }
            }
            let outs = self.biases[l].len();
            let mut y = self.biases[l].clone();
            for (row, &xj) in self.weights[l].chunks_exact(outs).zip(&x) {
                for (yk, wk) in y.iter_mut().zip(row) {
                    *yk += xj * wk;
                }
            }
            x = y;
        }
        Ok(x)
    }
}

//! One-hidden-layer perceptron: ReLU hidden layer, softmax output,
//! cross-entropy loss, Adam updates, early stopping on a 10% holdout.
//!
//! Parameters live in one flat vector laid out as
//! `[W1 (inputs×hidden), b1 (hidden), W2 (hidden×outputs), b2 (outputs)]`,
//! all row-major.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{argmax, check_inputs, index_classes, oversample_indices, Classifier, Family, ModelParams};
use crate::corpus::{ceil_fraction, Label};
use crate::error::{Error, Result};
use crate::seed::derive_seed;

pub const HIDDEN_RANGE: (usize, usize) = (64, 2048);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpConfig {
    pub hidden_size: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    /// Epochs without holdout-loss improvement before stopping.
    pub patience: usize,
    pub validation_fraction: f64,
    /// Minimum loss decrease that counts as an improvement.
    pub tol: f64,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden_size: 256,
            learning_rate: 1e-3,
            max_epochs: 200,
            batch_size: 32,
            patience: 10,
            validation_fraction: 0.1,
            tol: 1e-4,
            seed: 0,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = HIDDEN_RANGE;
        if !(lo..=hi).contains(&self.hidden_size) {
            return Err(Error::Config(format!("hidden_size {} outside [{lo}, {hi}]", self.hidden_size)));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::Config("batch_size and max_epochs must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::Config("validation_fraction must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MlpShape {
    pub inputs: usize,
    pub hidden: usize,
    pub outputs: usize,
}

impl MlpShape {
    pub fn n_params(self) -> usize {
        self.inputs * self.hidden + self.hidden + self.hidden * self.outputs + self.outputs
    }

    fn views(self, params: &[f64]) -> (ArrayView2<'_, f64>, ArrayView1<'_, f64>, ArrayView2<'_, f64>, ArrayView1<'_, f64>) {
        let (w1, rest) = params.split_at(self.inputs * self.hidden);
        let (b1, rest) = rest.split_at(self.hidden);
        let (w2, b2) = rest.split_at(self.hidden * self.outputs);
        (
            ArrayView2::from_shape((self.inputs, self.hidden), w1).expect("sized above"),
            ArrayView1::from(b1),
            ArrayView2::from_shape((self.hidden, self.outputs), w2).expect("sized above"),
            ArrayView1::from(b2),
        )
    }
}

/// A batch of rows with class indices and per-sample loss weights.
#[derive(Clone, Copy, Debug)]
pub struct MlpBatch<'a> {
    pub x: ArrayView2<'a, f64>,
    pub y: &'a [usize],
    pub weights: &'a [f64],
}

/// Weighted cross-entropy `Σ wᵢ·CEᵢ / batch size` and its exact gradient
/// with respect to the flat parameter vector.
pub fn mlp_loss_and_grad(params: &[f64], shape: MlpShape, batch: &MlpBatch) -> Result<(f64, Vec<f64>)> {
    if params.len() != shape.n_params() {
        return Err(Error::ShapeMismatch(format!(
            "{} parameters for a network needing {}",
            params.len(),
            shape.n_params()
        )));
    }
    let n = batch.x.nrows();
    if batch.x.ncols() != shape.inputs || batch.y.len() != n || batch.weights.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "batch of {}×{} features, {} labels, {} weights for {} inputs",
            n,
            batch.x.ncols(),
            batch.y.len(),
            batch.weights.len(),
            shape.inputs
        )));
    }
    if let Some(&bad) = batch.y.iter().find(|&&c| c >= shape.outputs) {
        return Err(Error::ShapeMismatch(format!("class index {bad} with {} outputs", shape.outputs)));
    }
    if n == 0 {
        return Ok((0.0, vec![0.0; params.len()]));
    }

    let (w1, b1, w2, b2) = shape.views(params);
    let z1 = batch.x.dot(&w1) + b1;
    let a1 = z1.mapv(|v| v.max(0.0));
    let mut dz2 = a1.dot(&w2) + b2;

    let scale = 1.0 / n as f64;
    let mut loss = 0.0;
    for (i, mut row) in dz2.axis_iter_mut(Axis(0)).enumerate() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let lse = max + row.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
        let w = batch.weights[i];
        loss += w * (lse - row[batch.y[i]]);
        row.mapv_inplace(|v| (v - lse).exp() * w * scale);
        row[batch.y[i]] -= w * scale;
    }
    loss *= scale;

    let gw2 = a1.t().dot(&dz2);
    let gb2 = dz2.sum_axis(Axis(0));
    let mut dz1 = dz2.dot(&w2.t());
    dz1.zip_mut_with(&z1, |d, &z| {
        if z <= 0.0 {
            *d = 0.0
        }
    });
    let gw1 = batch.x.t().dot(&dz1);
    let gb1 = dz1.sum_axis(Axis(0));

    let mut grad = Vec::with_capacity(params.len());
    grad.extend(gw1.iter());
    grad.extend(gb1.iter());
    grad.extend(gw2.iter());
    grad.extend(gb2.iter());
    Ok((loss, grad))
}

/// Trained network weights.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams {
    pub shape: MlpShape,
    pub params: Vec<f64>,
}

impl MlpParams {
    pub fn logits(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let (w1, b1, w2, b2) = self.shape.views(&self.params);
        let a1 = (x.dot(&w1) + b1).mapv(|v| v.max(0.0));
        a1.dot(&w2) + b2
    }

    pub fn predict_indices(&self, x: ArrayView2<f64>) -> Vec<usize> {
        self.logits(x).rows().into_iter().map(|r| argmax(r.iter().copied())).collect()
    }
}

/// Glorot-uniform weights, zero biases.
fn init_params(shape: MlpShape, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut params = vec![0.0; shape.n_params()];
    let limit1 = (6.0 / (shape.inputs + shape.hidden) as f64).sqrt();
    let limit2 = (6.0 / (shape.hidden + shape.outputs) as f64).sqrt();
    let w1_end = shape.inputs * shape.hidden;
    let w2_start = w1_end + shape.hidden;
    let w2_end = w2_start + shape.hidden * shape.outputs;
    for p in &mut params[..w1_end] {
        *p = rng.random_range(-limit1..limit1);
    }
    for p in &mut params[w2_start..w2_end] {
        *p = rng.random_range(-limit2..limit2);
    }
    params
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    lr: f64,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize, lr: f64) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            lr,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
            *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
        }
    }
}

fn gather(x: ArrayView2<f64>, rows: &[usize]) -> Array2<f64> {
    x.select(Axis(0), rows)
}

/// Trains on `x`/`y` after splitting off the early-stopping holdout and
/// oversampling the remainder. Deterministic for a fixed `cfg.seed`.
pub fn train_mlp(x: ArrayView2<f64>, y: &[Label], cfg: &MlpConfig) -> Result<Classifier> {
    cfg.validate()?;
    check_inputs(x, y)?;
    let (classes, yi) = index_classes(y);
    if classes.len() == 1 {
        return Ok(Classifier::constant(Family::Mlp, x.ncols(), classes[0]));
    }

    let n = y.len();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[0]));
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let n_holdout = if n >= 10 { ceil_fraction(cfg.validation_fraction, n) } else { 0 };
    let (holdout, train) = order.split_at(n_holdout);
    let mut train = train.to_vec();
    train.sort_unstable();

    let train_labels: Vec<Label> = train.iter().map(|&i| y[i]).collect();
    let train: Vec<usize> = oversample_indices(&train_labels, derive_seed(cfg.seed, &[1]))
        .into_iter()
        .map(|j| train[j])
        .collect();

    let shape = MlpShape {
        inputs: x.ncols(),
        hidden: cfg.hidden_size,
        outputs: classes.len(),
    };
    let mut params = init_params(shape, &mut rng);
    let mut adam = Adam::new(params.len(), cfg.learning_rate);

    let hold_x = gather(x, holdout);
    let hold_y: Vec<usize> = holdout.iter().map(|&i| yi[i]).collect();
    let hold_w = vec![1.0; holdout.len()];

    let mut best_loss = f64::INFINITY;
    let mut best_params = params.clone();
    let mut stale = 0;
    let mut epoch_order = train.clone();
    let ones = vec![1.0; cfg.batch_size];
    for _ in 0..cfg.max_epochs {
        epoch_order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in epoch_order.chunks(cfg.batch_size) {
            let bx = gather(x, chunk);
            let by: Vec<usize> = chunk.iter().map(|&i| yi[i]).collect();
            let batch = MlpBatch {
                x: bx.view(),
                y: &by,
                weights: &ones[..chunk.len()],
            };
            let (loss, grad) = mlp_loss_and_grad(&params, shape, &batch)?;
            epoch_loss += loss * chunk.len() as f64;
            adam.step(&mut params, &grad);
        }
        let monitored = if holdout.is_empty() {
            epoch_loss / epoch_order.len() as f64
        } else {
            let batch = MlpBatch {
                x: hold_x.view(),
                y: &hold_y,
                weights: &hold_w,
            };
            mlp_loss(&params, shape, &batch)
        };
        if monitored < best_loss - cfg.tol {
            best_loss = monitored;
            best_params.copy_from_slice(&params);
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    if !holdout.is_empty() {
        params = best_params;
    }
    Ok(Classifier {
        family: Family::Mlp,
        dim: x.ncols(),
        classes,
        params: ModelParams::Mlp(MlpParams { shape, params }),
    })
}

fn mlp_loss(params: &[f64], shape: MlpShape, batch: &MlpBatch) -> f64 {
    let model = MlpParams {
        shape,
        params: params.to_vec(),
    };
    let logits = model.logits(batch.x);
    let mut loss = 0.0;
    for (i, row) in logits.rows().into_iter().enumerate() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let lse = max + row.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
        loss += batch.weights[i] * (lse - row[batch.y[i]]);
    }
    loss / batch.y.len().max(1) as f64
}

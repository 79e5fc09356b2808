//! Three-layer graph convolutional network with hand-written
//! backpropagation.
//!
//! ```text
//! H1 = dropout(ReLU(Â X W1 + b1))
//! H2 = dropout(ReLU(Â H1 W2 + b2))
//! Z  = Â H2 W3 + b3,   output = log_softmax(Z)
//! ```

pub mod adam;
pub mod params;

use ndarray::{Array2, ArrayView2, Axis, Zip};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{FeatureGraph, PropagationOperator};

pub use adam::{AdamConfig, AdamState};
pub use params::GcnParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub hidden: usize,
    pub classes: usize,
    pub dropout_p: f64,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            hidden: 16,
            classes: 2,
            dropout_p: 0.5,
            adam: AdamConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidParameter("epochs must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::InvalidParameter(format!(
                "dropout probability must be in [0, 1) (got {})",
                self.dropout_p
            )));
        }
        if !(self.adam.lr > 0.0) {
            return Err(Error::InvalidParameter("learning rate must be > 0".into()));
        }
        Ok(())
    }
}

/// Inverted dropout applied during training.
pub struct Dropout<'a> {
    pub p: f64,
    pub rng: &'a mut dyn RngCore,
}

/// Intermediate values kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub ax: Array2<f64>,
    pub z1: Array2<f64>,
    pub h1: Array2<f64>,
    /// Per-unit dropout multipliers (0 or `1/(1-p)`); `None` when disabled.
    pub mask1: Option<Array2<f64>>,
    pub h1_out: Array2<f64>,
    pub p2: Array2<f64>,
    pub z2: Array2<f64>,
    pub h2: Array2<f64>,
    pub mask2: Option<Array2<f64>>,
    pub h2_out: Array2<f64>,
    pub p3: Array2<f64>,
    pub logits: Array2<f64>,
    pub log_probs: Array2<f64>,
}

fn relu(z: &Array2<f64>) -> Array2<f64> {
    z.mapv(|v| v.max(0.0))
}

fn dropout_mask(shape: (usize, usize), d: &mut Dropout<'_>) -> Array2<f64> {
    let keep = 1.0 / (1.0 - d.p);
    Array2::from_shape_simple_fn(shape, || if d.rng.random::<f64>() < d.p { 0.0 } else { keep })
}

/// Row-wise log-softmax with max subtraction.
pub fn log_softmax(z: &Array2<f64>) -> Array2<f64> {
    let mut out = z.clone();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        row.mapv_inplace(|v| v - lse);
    }
    out
}

pub fn forward(
    a: &PropagationOperator,
    x: ArrayView2<f64>,
    params: &GcnParams,
    mut dropout: Option<Dropout<'_>>,
) -> Result<ForwardCache> {
    params.check_shapes()?;
    if x.nrows() != a.size() || x.ncols() != params.input_dim() {
        return Err(Error::Dimension(format!(
            "features are {}x{}, operator is {}x{}, W1 expects {} columns",
            x.nrows(),
            x.ncols(),
            a.size(),
            a.size(),
            params.input_dim()
        )));
    }
    let n = x.nrows();
    let h = params.hidden_dim();

    let ax = a.matmul(x);
    let z1 = ax.dot(&params.w1) + &params.b1;
    let h1 = relu(&z1);
    let mask1 = dropout.as_mut().map(|d| dropout_mask((n, h), d));
    let h1_out = match &mask1 {
        Some(m) => &h1 * m,
        None => h1.clone(),
    };

    let p2 = a.matmul(h1_out.view());
    let z2 = p2.dot(&params.w2) + &params.b2;
    let h2 = relu(&z2);
    let mask2 = dropout.as_mut().map(|d| dropout_mask((n, h), d));
    let h2_out = match &mask2 {
        Some(m) => &h2 * m,
        None => h2.clone(),
    };

    let p3 = a.matmul(h2_out.view());
    let logits = p3.dot(&params.w3) + &params.b3;
    let log_probs = log_softmax(&logits);

    Ok(ForwardCache {
        ax,
        z1,
        h1,
        mask1,
        h1_out,
        p2,
        z2,
        h2,
        mask2,
        h2_out,
        p3,
        logits,
        log_probs,
    })
}

/// Mean negative log-likelihood over the masked nodes.
pub fn nll_loss(log_probs: &Array2<f64>, labels: &[usize], mask: &[bool]) -> Result<f64> {
    let count = mask.iter().filter(|m| **m).count();
    if count == 0 {
        return Err(Error::EmptyMask);
    }
    let sum: f64 = labels
        .iter()
        .zip(mask)
        .enumerate()
        .filter(|(_, (_, m))| **m)
        .map(|(i, (&y, _))| -log_probs[[i, y]])
        .sum();
    Ok(sum / count as f64)
}

fn relu_backward(grad: Array2<f64>, z: &Array2<f64>) -> Array2<f64> {
    let mut g = grad;
    Zip::from(&mut g).and(z).for_each(|g, &z| {
        if z <= 0.0 {
            *g = 0.0;
        }
    });
    g
}

/// Loss and reverse-mode gradients for every parameter.
pub fn loss_and_grads(
    a: &PropagationOperator,
    cache: &ForwardCache,
    params: &GcnParams,
    labels: &[usize],
    train_mask: &[bool],
) -> Result<(f64, GcnParams)> {
    let (n, c) = cache.log_probs.dim();
    if labels.len() != n || train_mask.len() != n {
        return Err(Error::Dimension("labels/mask length differs from node count".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= c) {
        return Err(Error::InvalidInput(format!("label {bad} outside {c} classes")));
    }
    let loss = nll_loss(&cache.log_probs, labels, train_mask)?;
    let count = train_mask.iter().filter(|m| **m).count() as f64;

    // d loss / d logits = (softmax - onehot) / |train| on masked rows.
    let mut d_logits = Array2::zeros((n, c));
    for i in 0..n {
        if !train_mask[i] {
            continue;
        }
        for k in 0..c {
            let p = cache.log_probs[[i, k]].exp();
            let target = if k == labels[i] { 1.0 } else { 0.0 };
            d_logits[[i, k]] = (p - target) / count;
        }
    }

    let w3 = cache.p3.t().dot(&d_logits);
    let b3 = d_logits.sum_axis(Axis(0));
    // Â is symmetric, so Âᵀ G = Â G.
    let mut d_h2 = a.matmul(d_logits.dot(&params.w3.t()).view());
    if let Some(m) = &cache.mask2 {
        d_h2 *= m;
    }
    let d_z2 = relu_backward(d_h2, &cache.z2);

    let w2 = cache.p2.t().dot(&d_z2);
    let b2 = d_z2.sum_axis(Axis(0));
    let mut d_h1 = a.matmul(d_z2.dot(&params.w2.t()).view());
    if let Some(m) = &cache.mask1 {
        d_h1 *= m;
    }
    let d_z1 = relu_backward(d_h1, &cache.z1);

    let w1 = cache.ax.t().dot(&d_z1);
    let b1 = d_z1.sum_axis(Axis(0));

    Ok((loss, GcnParams { w1, b1, w2, b2, w3, b3 }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: GcnParams,
    pub loss_history: Vec<f64>,
}

/// Derives the dropout stream from the training seed.
fn dropout_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// Full-batch training with the loss masked to the training nodes.
pub fn train(graph: &FeatureGraph, a: &PropagationOperator, cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_on(graph.nodes.view(), &graph.labels, &graph.train_mask, a, cfg)
}

pub fn train_on(
    x: ArrayView2<f64>,
    labels: &[usize],
    train_mask: &[bool],
    a: &PropagationOperator,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut params = GcnParams::init(x.ncols(), cfg.hidden, cfg.classes, cfg.seed)?;
    let mut adam = AdamState::new(&params, cfg.adam);
    let mut rng = dropout_rng(cfg.seed);
    let mut loss_history = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        let dropout = (cfg.dropout_p > 0.0).then_some(Dropout {
            p: cfg.dropout_p,
            rng: &mut rng,
        });
        let cache = forward(a, x, &params, dropout)?;
        let (loss, grads) = loss_and_grads(a, &cache, &params, labels, train_mask)?;
        adam.step(&mut params, &grads)?;
        loss_history.push(loss);
    }
    Ok(TrainOutcome { params, loss_history })
}

/// Second-layer activations with dropout disabled.
pub fn embed(a: &PropagationOperator, x: ArrayView2<f64>, params: &GcnParams) -> Result<Array2<f64>> {
    Ok(forward(a, x, params, None)?.h2)
}

/// Evaluation-mode log-probabilities.
pub fn log_probabilities(a: &PropagationOperator, x: ArrayView2<f64>, params: &GcnParams) -> Result<Array2<f64>> {
    Ok(forward(a, x, params, None)?.log_probs)
}

/// Arg-max class per node, ties to the lower class.
pub fn predict(a: &PropagationOperator, x: ArrayView2<f64>, params: &GcnParams) -> Result<Vec<usize>> {
    let lp = log_probabilities(a, x, params)?;
    Ok(lp
        .rows()
        .into_iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |best, (k, &v)| if v > best.1 { (k, v) } else { best },
                )
                .0
        })
        .collect())
}

pub fn accuracy(pred: &[usize], labels: &[usize], mask: &[bool]) -> f64 {
    let (mut hit, mut total) = (0usize, 0usize);
    for i in 0..pred.len() {
        if mask[i] {
            total += 1;
            if pred[i] == labels[i] {
                hit += 1;
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        hit as f64 / total as f64
    }
}

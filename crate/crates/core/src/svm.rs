//! Binary soft-margin SVM trained by sequential minimal optimization.
//!
//! The solver follows the maximal-violating-pair scheme with second-order
//! working-set selection: `i` maximizes `-y_t G_t` over the up set, `j`
//! minimizes the second-order decrease bound over the low set, and training
//! stops once the duality gap `m - M` falls below `tol`.

use std::collections::{HashMap, VecDeque};

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
        match *self {
            Kernel::Linear => a.dot(&b),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }

    /// RBF with `gamma = 1 / (d * var(X))`, the variance taken over every
    /// entry of `X`.
    pub fn rbf_scaled(x: ArrayView2<f64>) -> Kernel {
        let var = x.var(0.0);
        let gamma = if var > 0.0 && x.ncols() > 0 {
            1.0 / (x.ncols() as f64 * var)
        } else {
            1.0
        };
        Kernel::Rbf { gamma }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    /// `None` selects the scaled RBF kernel at fit time.
    pub kernel: Option<Kernel>,
    pub c: f64,
    pub tol: f64,
    /// Iteration cap, in units of `n` pair updates.
    pub max_passes: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            kernel: None,
            c: 1.0,
            tol: 1e-3,
            max_passes: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub support_indices: Vec<usize>,
    pub support_vectors: Array2<f64>,
    /// `alpha_i * y_i` per support vector.
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    pub kernel: Kernel,
    pub c: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Maps class indices (0 = Healthy, 1 = PD) to SVM targets -1 / +1.
pub fn targets_from_classes(classes: &[usize]) -> Vec<f64> {
    classes.iter().map(|&c| if c == 1 { 1.0 } else { -1.0 }).collect()
}

pub fn classes_from_targets(targets: &[f64]) -> Vec<usize> {
    targets.iter().map(|&t| usize::from(t > 0.0)).collect()
}

struct KernelColumns<'a> {
    x: ArrayView2<'a, f64>,
    kernel: Kernel,
    cache: HashMap<usize, Vec<f64>>,
    order: VecDeque<usize>,
    capacity: usize,
}

impl<'a> KernelColumns<'a> {
    fn new(x: ArrayView2<'a, f64>, kernel: Kernel) -> Self {
        // Roughly 64 MiB of cached columns.
        let capacity = ((64usize << 20) / (8 * x.nrows().max(1))).max(2);
        Self {
            x,
            kernel,
            cache: HashMap::new(),
            order: VecDeque::new(),
            capacity,
        }
    }

    fn column(&mut self, i: usize) -> &[f64] {
        if !self.cache.contains_key(&i) {
            if self.cache.len() >= self.capacity {
                if let Some(old) = self.order.pop_front() {
                    self.cache.remove(&old);
                }
            }
            let xi = self.x.row(i);
            let col = self.x.rows().into_iter().map(|r| self.kernel.eval(xi, r)).collect();
            self.cache.insert(i, col);
            self.order.push_back(i);
        }
        &self.cache[&i]
    }
}

pub fn train_svm(x: ArrayView2<f64>, y: &[f64], cfg: &SvmConfig) -> Result<SvmModel> {
    let n = x.nrows();
    if y.len() != n {
        return Err(Error::Dimension(format!("{n} rows but {} targets", y.len())));
    }
    if let Some(bad) = y.iter().find(|&&t| t != 1.0 && t != -1.0) {
        return Err(Error::InvalidInput(format!("SVM target {bad} is not +1/-1")));
    }
    if !y.contains(&1.0) || !y.contains(&-1.0) {
        return Err(Error::DegenerateLabels);
    }
    if !(cfg.c > 0.0) || !(cfg.tol > 0.0) {
        return Err(Error::InvalidParameter("C and tol must be > 0".into()));
    }
    let kernel = cfg.kernel.unwrap_or_else(|| Kernel::rbf_scaled(x));
    let c = cfg.c;
    let diag: Vec<f64> = x.rows().into_iter().map(|r| kernel.eval(r, r)).collect();
    let mut cols = KernelColumns::new(x, kernel);

    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let max_iter = cfg.max_passes.saturating_mul(n).max(1);
    let in_up = |a: f64, y: f64| (y > 0.0 && a < c) || (y < 0.0 && a > 0.0);
    let in_low = |a: f64, y: f64| (y > 0.0 && a > 0.0) || (y < 0.0 && a < c);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..n {
            if in_up(alpha[t], y[t]) {
                let v = -y[t] * grad[t];
                if v > gmax {
                    gmax = v;
                    i_sel = t;
                }
            }
        }
        let mut gmin = f64::INFINITY;
        for t in 0..n {
            if in_low(alpha[t], y[t]) {
                gmin = gmin.min(-y[t] * grad[t]);
            }
        }
        if i_sel == usize::MAX || gmax - gmin < cfg.tol {
            converged = true;
            break;
        }
        let i = i_sel;
        let ki: Vec<f64> = cols.column(i).to_vec();

        let mut best = f64::INFINITY;
        let mut j_sel = usize::MAX;
        for t in 0..n {
            if !in_low(alpha[t], y[t]) {
                continue;
            }
            let b = gmax + y[t] * grad[t];
            if b > 0.0 {
                let mut a = diag[i] + diag[t] - 2.0 * ki[t];
                if a <= 0.0 {
                    a = 1e-12;
                }
                let score = -(b * b) / a;
                if score < best {
                    best = score;
                    j_sel = t;
                }
            }
        }
        if j_sel == usize::MAX {
            converged = true;
            break;
        }
        let j = j_sel;
        let kj: Vec<f64> = cols.column(j).to_vec();

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let mut quad = diag[i] + diag[j] - 2.0 * ki[j];
        if quad <= 0.0 {
            quad = 1e-12;
        }
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            // Q_ti = y_t y_i K_ti
            grad[t] += y[t] * (y[i] * ki[t] * di + y[j] * kj[t] * dj);
        }
        iterations += 1;
    }

    let bias = -compute_rho(&alpha, &grad, y, c);
    let mut support_indices = Vec::new();
    let mut dual_coefs = Vec::new();
    for t in 0..n {
        if alpha[t] > 0.0 {
            support_indices.push(t);
            dual_coefs.push(alpha[t] * y[t]);
        }
    }
    let support_vectors = x.select(Axis(0), &support_indices);
    Ok(SvmModel {
        support_indices,
        support_vectors,
        dual_coefs,
        bias,
        kernel,
        c,
        iterations,
        converged,
    })
}

fn compute_rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    if free > 0 {
        sum_free / free as f64
    } else {
        0.5 * (ub + lb)
    }
}

impl SvmModel {
    pub fn dim(&self) -> usize {
        self.support_vectors.ncols()
    }

    pub fn decision_function(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.dim() && !self.support_indices.is_empty() {
            return Err(Error::Dimension(format!(
                "model expects {} features, got {}",
                self.dim(),
                x.ncols()
            )));
        }
        let row = |r: ArrayView1<f64>| {
            self.support_vectors
                .rows()
                .into_iter()
                .zip(&self.dual_coefs)
                .map(|(sv, &coef)| coef * self.kernel.eval(sv, r))
                .sum::<f64>()
                + self.bias
        };
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            let rows: Vec<_> = x.rows().into_iter().collect();
            Ok(rows.into_par_iter().map(row).collect())
        }
        #[cfg(not(feature = "parallel"))]
        {
            Ok(x.rows().into_iter().map(row).collect())
        }
    }

    /// Sign of the decision function; exact zeros map to +1.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        Ok(self
            .decision_function(x)?
            .into_iter()
            .map(|f| if f >= 0.0 { 1.0 } else { -1.0 })
            .collect())
    }

    /// Predictions as class indices (0 = Healthy, 1 = PD).
    pub fn predict_classes(&self, x: ArrayView2<f64>) -> Result<Vec<usize>> {
        Ok(classes_from_targets(&self.predict(x)?))
    }
}

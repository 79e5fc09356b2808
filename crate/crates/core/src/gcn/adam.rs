use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gcn::params::GcnParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected Adam moments for one parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: GcnParams,
    pub v: GcnParams,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &GcnParams, config: AdamConfig) -> Self {
        Self {
            config,
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut GcnParams, grads: &GcnParams) -> Result<()> {
        if !grads.is_finite() {
            return Err(Error::Divergence);
        }
        if grads.num_parameters() != params.num_parameters() {
            return Err(Error::Dimension("gradient shapes differ from parameters".into()));
        }
        self.t += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let c1 = 1.0 - beta1.powi(self.t as i32);
        let c2 = 1.0 - beta2.powi(self.t as i32);
        let targets = params.tensors_mut();
        let ms = self.m.tensors_mut();
        let vs = self.v.tensors_mut();
        for (((p, g), m), v) in targets.into_iter().zip(grads.tensors()).zip(ms).zip(vs) {
            for i in 0..p.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

/// Adam on a single scalar; used to check the update rule in isolation.
pub fn adam_scalar_step(theta: f64, grad: f64, m: &mut f64, v: &mut f64, t: u64, cfg: &AdamConfig) -> f64 {
    *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * grad;
    *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * grad * grad;
    let m_hat = *m / (1.0 - cfg.beta1.powi(t as i32));
    let v_hat = *v / (1.0 - cfg.beta2.powi(t as i32));
    theta - cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_params(theta: f64) -> GcnParams {
        let mut p = GcnParams::zeros(1, 1, 1);
        p.w1[[0, 0]] = theta;
        p
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        for g in [3.7, -0.02, 150.0] {
            let mut p = scalar_params(1.0);
            let mut grads = p.zeros_like();
            grads.w1[[0, 0]] = g;
            let mut s = AdamState::new(&p, AdamConfig::default());
            s.step(&mut p, &grads).unwrap();
            assert!((p.w1[[0, 0]] - (1.0 - 0.01 * g.signum())).abs() < 1e-6);
            assert_eq!(s.t, 1);
        }
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = GcnParams::init(3, 4, 2, 1).unwrap();
        let before = p.clone();
        let mut s = AdamState::new(&p, AdamConfig::default());
        let zero = p.zeros_like();
        s.step(&mut p, &zero).unwrap();
        assert_eq!(p, before);
        assert_eq!(s.t, 1);
        assert!(s.v.tensors().iter().all(|t| t.iter().all(|&v| v >= 0.0)));
    }

    #[test]
    fn quadratic_decreases() {
        let cfg = AdamConfig::default();
        let (mut theta, mut m, mut v) = (1.0f64, 0.0, 0.0);
        let mut f = theta * theta;
        for t in 1..=2 {
            theta = adam_scalar_step(theta, 2.0 * theta, &mut m, &mut v, t, &cfg);
            assert!(theta * theta < f);
            f = theta * theta;
        }
        let mut p = scalar_params(1.0);
        let mut s = AdamState::new(&p, cfg);
        for _ in 0..2 {
            let mut g = p.zeros_like();
            g.w1[[0, 0]] = 2.0 * p.w1[[0, 0]];
            s.step(&mut p, &g).unwrap();
        }
        assert_eq!(p.w1[[0, 0]], theta);
    }

    #[test]
    fn non_finite_gradient_diverges() {
        let mut p = scalar_params(1.0);
        let mut g = p.zeros_like();
        g.b3[0] = f64::NAN;
        let mut s = AdamState::new(&p, AdamConfig::default());
        assert!(matches!(s.step(&mut p, &g), Err(Error::Divergence)));
        assert_eq!(s.t, 0);
    }
}

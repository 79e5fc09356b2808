use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weights and biases of the three graph-convolution layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcnParams {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub w3: Array2<f64>,
    pub b3: Array1<f64>,
}

fn glorot(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize) -> Array2<f64> {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Array2::from_shape_simple_fn((fan_in, fan_out), || rng.random_range(-bound..=bound))
}

impl GcnParams {
    /// Glorot-uniform weights, zero biases.
    pub fn init(d: usize, h: usize, c: usize, seed: u64) -> Result<Self> {
        if d == 0 || h == 0 || c == 0 {
            return Err(Error::InvalidParameter("layer widths must be >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w1 = glorot(&mut rng, d, h);
        let w2 = glorot(&mut rng, h, h);
        let w3 = glorot(&mut rng, h, c);
        Ok(Self {
            w1,
            b1: Array1::zeros(h),
            w2,
            b2: Array1::zeros(h),
            w3,
            b3: Array1::zeros(c),
        })
    }

    pub fn zeros(d: usize, h: usize, c: usize) -> Self {
        Self {
            w1: Array2::zeros((d, h)),
            b1: Array1::zeros(h),
            w2: Array2::zeros((h, h)),
            b2: Array1::zeros(h),
            w3: Array2::zeros((h, c)),
            b3: Array1::zeros(c),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.input_dim(), self.hidden_dim(), self.output_dim())
    }

    pub fn input_dim(&self) -> usize {
        self.w1.nrows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.w3.ncols()
    }

    pub fn check_shapes(&self) -> Result<()> {
        let (d, h, c) = (self.input_dim(), self.hidden_dim(), self.output_dim());
        let ok = self.b1.len() == h
            && self.w2.dim() == (h, h)
            && self.b2.len() == h
            && self.w3.nrows() == h
            && self.b3.len() == c
            && d > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::Dimension("inconsistent GCN parameter shapes".into()))
        }
    }

    /// Flat views in the order w1, b1, w2, b2, w3, b3.
    pub fn tensors(&self) -> [&[f64]; 6] {
        [
            self.w1.as_slice().expect("standard layout"),
            self.b1.as_slice().expect("standard layout"),
            self.w2.as_slice().expect("standard layout"),
            self.b2.as_slice().expect("standard layout"),
            self.w3.as_slice().expect("standard layout"),
            self.b3.as_slice().expect("standard layout"),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 6] {
        [
            self.w1.as_slice_mut().expect("standard layout"),
            self.b1.as_slice_mut().expect("standard layout"),
            self.w2.as_slice_mut().expect("standard layout"),
            self.b2.as_slice_mut().expect("standard layout"),
            self.w3.as_slice_mut().expect("standard layout"),
            self.b3.as_slice_mut().expect("standard layout"),
        ]
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_and_determinism() {
        let p = GcnParams::init(9, 16, 2, 42).unwrap();
        assert_eq!(p.w1.dim(), (9, 16));
        assert_eq!(p.b1.len(), 16);
        assert_eq!(p.w2.dim(), (16, 16));
        assert_eq!(p.b2.len(), 16);
        assert_eq!(p.w3.dim(), (16, 2));
        assert_eq!(p.b3.len(), 2);
        assert_eq!(p, GcnParams::init(9, 16, 2, 42).unwrap());
        assert_ne!(p, GcnParams::init(9, 16, 2, 43).unwrap());
        assert!(p.check_shapes().is_ok());
    }

    #[test]
    fn glorot_bound() {
        let p = GcnParams::init(9, 16, 2, 7).unwrap();
        let bound = (6.0f64 / 25.0).sqrt();
        assert!(p.w1.iter().all(|w| w.abs() <= bound));
        assert!(p.b1.iter().chain(p.b2.iter()).chain(p.b3.iter()).all(|&b| b == 0.0));
        assert!(GcnParams::init(0, 16, 2, 7).is_err());
    }
}

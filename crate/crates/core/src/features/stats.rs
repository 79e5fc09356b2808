use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population standard deviation.
pub fn population_sd(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
}

pub fn rms(x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::EmptyInput("rms of an empty window".into()));
    }
    Ok((x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt())
}

/// Population moments and extremes of a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveStats {
    pub variance: f64,
    pub sd: f64,
    pub skewness: f64,
    /// Fisher excess kurtosis (Gaussian = 0).
    pub kurtosis_excess: f64,
    pub min: f64,
    pub max: f64,
    pub range: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Moments {
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
    pub min: f64,
    pub max: f64,
}

pub(crate) fn moments(x: &[f64]) -> Moments {
    let m = mean(x);
    let n = x.len() as f64;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in x {
        let d = v - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
        min = min.min(v);
        max = max.max(v);
    }
    Moments {
        m2: m2 / n,
        m3: m3 / n,
        m4: m4 / n,
        min,
        max,
    }
}

pub fn descriptive_stats(x: &[f64]) -> Result<DescriptiveStats> {
    if x.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "descriptive statistics need at least 4 samples (got {})",
            x.len()
        )));
    }
    let m = moments(x);
    if m.m2 <= 0.0 {
        return Err(Error::InvalidInput(
            "zero variance: skewness and kurtosis are undefined".into(),
        ));
    }
    Ok(DescriptiveStats {
        variance: m.m2,
        sd: m.m2.sqrt(),
        skewness: m.m3 / m.m2.powf(1.5),
        kurtosis_excess: m.m4 / (m.m2 * m.m2) - 3.0,
        min: m.min,
        max: m.max,
        range: m.max - m.min,
    })
}

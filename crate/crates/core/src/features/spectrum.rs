use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Taper {
    #[default]
    Rectangular,
    Hann,
}

/// One-sided power spectrum on the bins `k * fs / n`, `k = 0..=n/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
}

impl Spectrum {
    pub fn total_power(&self) -> f64 {
        self.power.iter().sum()
    }

    fn bin_width(&self) -> f64 {
        match self.freqs.as_slice() {
            [a, b, ..] => b - a,
            _ => 0.0,
        }
    }

    /// Frequency of the strongest bin.
    pub fn peak_frequency(&self) -> Option<f64> {
        self.power
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| self.freqs[i])
    }
}

/// Mean-removed, rectangular-window periodogram whose bins sum to the
/// population variance of the input.
pub fn power_spectrum(x: &[f64], fs: f64) -> Result<Spectrum> {
    power_spectrum_with(x, fs, Taper::Rectangular)
}

pub fn power_spectrum_with(x: &[f64], fs: f64, taper: Taper) -> Result<Spectrum> {
    let n = x.len();
    if n < 16 {
        return Err(Error::InsufficientData(format!(
            "power spectrum needs at least 16 samples (got {n})"
        )));
    }
    if !(fs > 0.0) {
        return Err(Error::InvalidParameter(format!("sampling rate {fs}")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite sample".into()));
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let weights: Vec<f64> = match taper {
        Taper::Rectangular => vec![1.0; n],
        Taper::Hann => (0..n)
            .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
            .collect(),
    };
    // Keeps total power comparable to the variance for tapered windows.
    let energy = weights.iter().map(|w| w * w).sum::<f64>() / n as f64;

    let mut buf: Vec<Complex<f64>> = x
        .iter()
        .zip(&weights)
        .map(|(v, w)| Complex::new((v - mean) * w, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let half = n / 2;
    let scale = 1.0 / (n as f64 * n as f64 * energy);
    let mut freqs = Vec::with_capacity(half + 1);
    let mut power = Vec::with_capacity(half + 1);
    for (k, c) in buf.iter().take(half + 1).enumerate() {
        let folded = if k == 0 || (n.is_multiple_of(2) && k == half) {
            1.0
        } else {
            2.0
        };
        freqs.push(k as f64 * fs / n as f64);
        power.push(folded * c.norm_sqr() * scale);
    }
    Ok(Spectrum { freqs, power })
}

fn checked_total(s: &Spectrum) -> Result<f64> {
    let total = s.total_power();
    if !(total > 0.0) || s.freqs.is_empty() || s.freqs.len() != s.power.len() {
        return Err(Error::UndefinedSpectrum);
    }
    Ok(total)
}

/// Frequency below which half of the spectral power lies. Each bin's power
/// is spread uniformly over `[f - df/2, f + df/2]`, so a lone spectral line
/// yields its own frequency.
pub fn median_frequency(s: &Spectrum) -> Result<f64> {
    let total = checked_total(s)?;
    let half = 0.5 * total;
    let df = s.bin_width();
    let nyquist = *s.freqs.last().unwrap();
    let mut cum = 0.0;
    for (f, p) in s.freqs.iter().zip(&s.power) {
        if cum + p >= half && *p > 0.0 {
            let f = f - 0.5 * df + (half - cum) / p * df;
            return Ok(f.clamp(s.freqs[0], nyquist));
        }
        cum += p;
    }
    Ok(nyquist)
}

/// Spectral centroid.
pub fn mean_frequency(s: &Spectrum) -> Result<f64> {
    let total = checked_total(s)?;
    Ok(s.freqs.iter().zip(&s.power).map(|(f, p)| f * p).sum::<f64>() / total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sine(f0: f64, fs: f64, n: usize, amp: f64) -> Vec<f64> {
        (0..n).map(|i| amp * (2.0 * PI * f0 * i as f64 / fs).sin()).collect()
    }

    fn lines(at: &[(usize, f64)]) -> Spectrum {
        let mut power = vec![0.0; 51];
        for &(i, p) in at {
            power[i] = p;
        }
        Spectrum {
            freqs: (0..51).map(f64::from).collect(),
            power,
        }
    }

    #[test]
    fn sine_power_concentrates_in_its_bin() {
        let s = power_spectrum(&sine(5.0, 100.0, 1000, 1.0), 100.0).unwrap();
        let bin = s.freqs.iter().position(|&f| (f - 5.0).abs() < 1e-9).unwrap();
        assert!(s.power[bin] / s.total_power() > 0.99);
        assert!((s.total_power() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn constant_signal_has_no_power() {
        let s = power_spectrum(&[4.0; 64], 100.0).unwrap();
        assert!(s.power.iter().all(|&p| p.abs() < 1e-24));
        assert!(matches!(median_frequency(&s), Err(Error::UndefinedSpectrum)));
        assert!(matches!(mean_frequency(&s), Err(Error::UndefinedSpectrum)));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(power_spectrum(&[1.0; 8], 100.0).is_err());
        let mut x = vec![1.0; 32];
        x[3] = f64::NAN;
        assert!(matches!(power_spectrum(&x, 100.0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn odd_length_parseval() {
        let x: Vec<f64> = (0..101).map(|i| ((i * 37) % 11) as f64).collect();
        let s = power_spectrum(&x, 250.0).unwrap();
        let m = x.iter().sum::<f64>() / 101.0;
        let var = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 101.0;
        assert!((s.total_power() - var).abs() / var < 1e-12);
        assert_eq!(s.freqs.len(), 51);
    }

    #[test]
    fn hann_taper_roughly_preserves_power() {
        let x = sine(12.0, 200.0, 400, 3.0);
        let s = power_spectrum_with(&x, 200.0, Taper::Hann).unwrap();
        assert!((s.total_power() - 4.5).abs() / 4.5 < 0.02);
        assert!((s.peak_frequency().unwrap() - 12.0).abs() < 1e-9);
    }

    #[test]
    fn median_of_single_line() {
        assert_eq!(median_frequency(&lines(&[(5, 2.0)])).unwrap(), 5.0);
    }

    #[test]
    fn median_of_two_equal_lines() {
        // Cumulative-sum oracle: half the power is reached at the top edge
        // of the 5 Hz bin, i.e. 5 + df/2 with df = 1.
        let got = median_frequency(&lines(&[(5, 1.0), (15, 1.0)])).unwrap();
        assert_eq!(got, 5.5);
    }

    #[test]
    fn median_of_flat_spectrum() {
        let s = Spectrum {
            freqs: (0..=50).map(f64::from).collect(),
            power: vec![1.0; 51],
        };
        assert!((median_frequency(&s).unwrap() - 25.0).abs() <= 1.0);
    }

    #[test]
    fn mean_frequency_examples() {
        assert_eq!(mean_frequency(&lines(&[(7, 3.0)])).unwrap(), 7.0);
        assert_eq!(mean_frequency(&lines(&[(5, 1.0), (15, 1.0)])).unwrap(), 10.0);
    }
}

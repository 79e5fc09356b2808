//! Per-window sEMG features: amplitude and distribution statistics, FFT
//! spectral features, and the nonlinear set (recurrence quantification,
//! sample entropy, correlation dimension).

pub mod dimension;
pub mod entropy;
pub mod rqa;
pub mod spectrum;
pub mod standardize;
pub mod stats;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dimension::{correlation_dimension, log_radii};
pub use entropy::{sample_entropy, SampleEntropy};
pub use rqa::{recurrence_matrix, rqa_measures, RecurrenceMatrix, RqaMeasures};
pub use spectrum::{mean_frequency, median_frequency, power_spectrum, Spectrum, Taper};
pub use standardize::Standardizer;
pub use stats::{descriptive_stats, rms, DescriptiveStats};

/// Columns fed to the classifiers, in order.
pub const MODEL_FEATURES: [&str; 9] = [
    "rms",
    "mdf",
    "mean_freq",
    "variance",
    "skewness",
    "kurtosis",
    "max",
    "min",
    "range",
];

/// Numeric columns of the feature CSV, in order.
pub const ALL_FEATURES: [&str; 14] = [
    "rms",
    "mdf",
    "mean_freq",
    "variance",
    "skewness",
    "kurtosis",
    "max",
    "min",
    "range",
    "sd",
    "rec",
    "det",
    "samp_en",
    "cd",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub taper: Taper,
    pub rqa_m: usize,
    pub rqa_tau: usize,
    /// Recurrence threshold as a multiple of the window SD.
    pub rqa_eps_sd: f64,
    pub rqa_l_min: usize,
    pub sampen_m: usize,
    /// SampEn tolerance as a multiple of the window SD.
    pub sampen_r_sd: f64,
    pub cd_m: usize,
    pub cd_tau: usize,
    pub cd_radii: usize,
    pub cd_r_lo_sd: f64,
    pub cd_r_hi_sd: f64,
    /// Compute REC, DET, SampEn and CD. These are O(N^2) per window.
    pub nonlinear: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            taper: Taper::Rectangular,
            rqa_m: 3,
            rqa_tau: 1,
            rqa_eps_sd: 0.2,
            rqa_l_min: 2,
            sampen_m: 2,
            sampen_r_sd: 0.2,
            cd_m: 3,
            cd_tau: 1,
            cd_radii: 12,
            cd_r_lo_sd: 0.05,
            cd_r_hi_sd: 2.0,
            nonlinear: true,
        }
    }
}

/// Features of one window. Values that are undefined for the window (for
/// example skewness of a constant signal) are NaN and listed in
/// `unavailable`; nonlinear features skipped by configuration are NaN and
/// not listed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub rms: f64,
    pub mdf: f64,
    pub mean_freq: f64,
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis_excess: f64,
    pub max: f64,
    pub min: f64,
    pub range: f64,
    pub sd: f64,
    pub rec: f64,
    pub det: f64,
    pub samp_en: f64,
    pub samp_en_capped: bool,
    pub cd: f64,
    pub unavailable: Vec<String>,
}

impl FeatureVector {
    pub fn model_features(&self) -> [f64; 9] {
        [
            self.rms,
            self.mdf,
            self.mean_freq,
            self.variance,
            self.skewness,
            self.kurtosis_excess,
            self.max,
            self.min,
            self.range,
        ]
    }

    pub fn all_features(&self) -> [f64; 14] {
        let m = self.model_features();
        [
            m[0],
            m[1],
            m[2],
            m[3],
            m[4],
            m[5],
            m[6],
            m[7],
            m[8],
            self.sd,
            self.rec,
            self.det,
            self.samp_en,
            self.cd,
        ]
    }

    pub fn from_all_features(v: [f64; 14]) -> Self {
        Self {
            rms: v[0],
            mdf: v[1],
            mean_freq: v[2],
            variance: v[3],
            skewness: v[4],
            kurtosis_excess: v[5],
            max: v[6],
            min: v[7],
            range: v[8],
            sd: v[9],
            rec: v[10],
            det: v[11],
            samp_en: v[12],
            samp_en_capped: false,
            cd: v[13],
            unavailable: Vec::new(),
        }
    }

    pub fn is_degenerate(&self) -> bool {
        !self.unavailable.is_empty()
    }
}

fn tag<T>(feature: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::in_feature(feature, e))
}

/// Computes every feature of one window.
pub fn extract_features(x: &[f64], fs: f64, cfg: &FeatureConfig) -> Result<FeatureVector> {
    let rms = tag("rms", stats::rms(x))?;
    if x.len() < 16 {
        return Err(Error::in_feature(
            "spectrum",
            Error::InsufficientData(format!("window of {} samples", x.len())),
        ));
    }
    let mut unavailable = Vec::new();
    let mut missing = |name: &str| {
        unavailable.push(name.to_string());
        f64::NAN
    };

    let m = stats::moments(x);
    let variance = m.m2;
    let sd = variance.sqrt();
    let (skewness, kurtosis_excess) = match descriptive_stats(x) {
        Ok(s) => (s.skewness, s.kurtosis_excess),
        Err(Error::InvalidInput(_)) => (missing("skewness"), missing("kurtosis")),
        Err(e) => return Err(Error::in_feature("descriptive_stats", e)),
    };

    let spec = tag("spectrum", spectrum::power_spectrum_with(x, fs, cfg.taper))?;
    let (mdf, mean_freq) = match (median_frequency(&spec), mean_frequency(&spec)) {
        (Ok(a), Ok(b)) => (a, b),
        _ => (missing("mdf"), missing("mean_freq")),
    };

    let (mut rec, mut det, mut samp_en, mut cd) = (f64::NAN, f64::NAN, f64::NAN, f64::NAN);
    let mut samp_en_capped = false;
    if cfg.nonlinear {
        let r = tag("rqa", recurrence_matrix(x, cfg.rqa_m, cfg.rqa_tau, cfg.rqa_eps_sd * sd))?;
        let q = tag("rqa", rqa_measures(&r, cfg.rqa_l_min))?;
        rec = q.rec;
        det = q.det;
        if sd > 0.0 {
            let s = tag("samp_en", sample_entropy(x, cfg.sampen_m, cfg.sampen_r_sd * sd))?;
            samp_en = s.value;
            samp_en_capped = s.capped;
            let radii = log_radii(cfg.cd_r_lo_sd * sd, cfg.cd_r_hi_sd * sd, cfg.cd_radii);
            cd = match correlation_dimension(x, cfg.cd_m, cfg.cd_tau, &radii) {
                Ok(v) => v,
                Err(Error::UndefinedScaling) => missing("cd"),
                Err(e) => return Err(Error::in_feature("cd", e)),
            };
        } else {
            samp_en = missing("samp_en");
            // Every delay vector coincides.
            cd = 0.0;
        }
    }

    Ok(FeatureVector {
        rms,
        mdf,
        mean_freq,
        variance,
        skewness,
        kurtosis_excess,
        max: m.max,
        min: m.min,
        range: m.max - m.min,
        sd,
        rec,
        det,
        samp_en,
        samp_en_capped,
        cd,
        unavailable,
    })
}

/// Extracts features for many windows, in input order.
pub fn extract_many<'a, I>(windows: I, fs: f64, cfg: &FeatureConfig) -> Result<Vec<FeatureVector>>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let windows: Vec<&[f64]> = windows.into_iter().collect();
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        windows.par_iter().map(|w| extract_features(w, fs, cfg)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        windows.iter().map(|w| extract_features(w, fs, cfg)).collect()
    }
}

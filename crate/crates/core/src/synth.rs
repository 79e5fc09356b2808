//! Synthetic sEMG envelope cohorts that follow the five-phase recording
//! protocol.
//!
//! A recording is `level(t) * (1 + depth * sin(2 pi f t + phi)) * exp(s(t) z(t) - s(t)^2 / 2)`:
//! `level` follows the protocol phases (rest, ramp, sustained hold, ramp,
//! periodic bursts), the sinusoidal factor is the tremor amplitude
//! modulation, and `z` is unit low-pass Gaussian noise. The log-scale noise
//! `s = s_rest * rest / level` shrinks and the noise corner rises as the
//! muscle activates, so each protocol phase has its own amplitude, spectral
//! and shape signature. Irregularity jitters burst timing and amplitude, and
//! an optional white component of SD `broadband * level` raises sample
//! entropy.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal_io::{
    recording_to_csv, Group, Hand, Manifest, ManifestEntry, ProtocolTiming, Recording, SegmentId, StageMark,
    MANIFEST_FILE,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalProfile {
    /// Resting envelope level in AU.
    pub baseline_level: f64,
    /// Log-scale envelope noise SD at rest.
    pub envelope_log_sd: f64,
    /// Sustained-hold level as a multiple of the resting level.
    pub contraction_gain: f64,
    /// Tremor modulation frequency in Hz; 0 disables tremor.
    pub tremor_freq: f64,
    /// Peak fractional amplitude modulation, in [0, 1].
    pub tremor_depth: f64,
    /// Burst timing and amplitude jitter, in [0, 1].
    pub burst_irregularity: f64,
    /// Corner frequency of the low-pass noise at rest in Hz.
    pub noise_corner_hz: f64,
    /// White noise SD as a fraction of the instantaneous level.
    pub broadband: f64,
}

impl SignalProfile {
    pub fn healthy() -> Self {
        Self {
            baseline_level: 1.0,
            envelope_log_sd: 0.6,
            contraction_gain: 8.0,
            tremor_freq: 0.0,
            tremor_depth: 0.0,
            burst_irregularity: 0.0,
            noise_corner_hz: 100.0,
            broadband: 0.0,
        }
    }

    pub fn pd() -> Self {
        Self {
            tremor_freq: 5.0,
            tremor_depth: 0.01,
            burst_irregularity: 0.02,
            broadband: 0.02,
            ..Self::healthy()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.baseline_level,
            self.envelope_log_sd,
            self.contraction_gain,
            self.tremor_freq,
            self.tremor_depth,
            self.burst_irregularity,
            self.noise_corner_hz,
            self.broadband,
        ];
        if all.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidParameter(
                "signal profile values must be finite and >= 0".into(),
            ));
        }
        if self.tremor_depth > 1.0 || self.burst_irregularity > 1.0 {
            return Err(Error::InvalidParameter(
                "tremor_depth and burst_irregularity must be <= 1".into(),
            ));
        }
        if !(self.noise_corner_hz > 0.0) {
            return Err(Error::InvalidParameter("noise corner must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    pub n_pd: usize,
    pub n_healthy: usize,
    pub fs: f64,
    pub seed: u64,
    pub pd_profile: SignalProfile,
    pub healthy_profile: SignalProfile,
    pub timing: ProtocolTiming,
    /// Log-normal spread of the per-subject resting level and noise corner,
    /// which together make each subject's windows cluster.
    pub identity_spread: f64,
    /// Log-normal spread of the per-subject envelope noise.
    pub envelope_spread: f64,
    /// Log-normal spread of per-subject gain and tremor depth.
    pub trait_spread: f64,
    /// Stationary SD of the slow log-level drift within a recording.
    pub level_drift: f64,
    /// Correlation time of the level drift in seconds.
    pub drift_time_s: f64,
    /// The noise corner scales as `(level / rest)^exponent`.
    pub corner_exponent: f64,
}

impl Default for CohortSpec {
    fn default() -> Self {
        Self {
            n_pd: 5,
            n_healthy: 5,
            fs: 1000.0,
            seed: 0,
            pd_profile: SignalProfile::pd(),
            healthy_profile: SignalProfile::healthy(),
            timing: ProtocolTiming::default(),
            identity_spread: 0.6,
            envelope_spread: 0.3,
            trait_spread: 0.1,
            level_drift: 0.0,
            drift_time_s: 10.0,
            corner_exponent: 1.0,
        }
    }
}

impl CohortSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_pd + self.n_healthy < 2 {
            return Err(Error::InvalidParameter("cohort needs at least 2 subjects".into()));
        }
        if !(self.fs > 0.0 && self.fs.is_finite()) {
            return Err(Error::InvalidParameter(format!("sampling rate {}", self.fs)));
        }
        let spreads = [
            self.identity_spread,
            self.envelope_spread,
            self.trait_spread,
            self.level_drift,
            self.corner_exponent,
        ];
        if spreads.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || !(self.drift_time_s > 0.0) {
            return Err(Error::InvalidParameter(
                "spreads, drift and corner exponent must be >= 0 and drift time > 0".into(),
            ));
        }
        let durations = self.timing.bounds().map(|(_, a, b)| b - a);
        if durations.iter().any(|d| !(*d >= 0.0)) || self.timing.total_s() <= 0.0 {
            return Err(Error::InvalidParameter("segment durations must be >= 0".into()));
        }
        self.pd_profile.validate()?;
        self.healthy_profile.validate()
    }

    pub fn profile(&self, group: Group) -> &SignalProfile {
        match group {
            Group::Pd => &self.pd_profile,
            Group::Healthy => &self.healthy_profile,
        }
    }

    /// Subject ids in generation order: `pd01..`, then `hc01..`.
    pub fn subjects(&self) -> Vec<(String, Group)> {
        let pd = (1..=self.n_pd).map(|i| (format!("pd{i:02}"), Group::Pd));
        let hc = (1..=self.n_healthy).map(|i| (format!("hc{i:02}"), Group::Healthy));
        pd.chain(hc).collect()
    }
}

/// FNV-1a, used to derive stable per-subject substreams.
fn stream_id(parts: &[&str]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for part in parts {
        for b in part.bytes().chain(std::iter::once(0u8)) {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

fn substream(seed: u64, parts: &[&str]) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(parts));
    rng
}

/// Gaussian noise is clipped at this many SDs so recordings stay free of
/// validation outliers.
const NOISE_CLIP: f64 = 3.0;

/// Subject-level traits shared by both hands.
struct SubjectTraits {
    envelope_log_sd: f64,
    level: f64,
    gain: f64,
    tremor_depth: f64,
    tremor_freq: f64,
    noise_corner_hz: f64,
}

fn subject_traits(spec: &CohortSpec, subject_id: &str, p: &SignalProfile) -> SubjectTraits {
    let mut rng = substream(spec.seed, &[subject_id]);
    // Draws are truncated at 2 SD so no subject's noise reaches the
    // validation outlier threshold.
    let mut lognormal = |spread: f64| {
        let z: f64 = StandardNormal.sample(&mut rng);
        (spread * z.clamp(-2.0, 2.0)).exp()
    };
    let level = p.baseline_level * lognormal(spec.identity_spread);
    let corner = p.noise_corner_hz * lognormal(spec.identity_spread);
    let gain = 1.0 + (p.contraction_gain - 1.0) * lognormal(spec.trait_spread);
    let depth_scale = lognormal(spec.trait_spread);
    let envelope_log_sd = p.envelope_log_sd * lognormal(spec.envelope_spread);
    SubjectTraits {
        envelope_log_sd,
        level,
        gain,
        tremor_depth: (p.tremor_depth * depth_scale).min(1.0),
        tremor_freq: p.tremor_freq,
        noise_corner_hz: corner,
    }
}

fn sample_counts(timing: &ProtocolTiming, fs: f64) -> [usize; 5] {
    timing.bounds().map(|(_, a, b)| ((b - a) * fs).round() as usize)
}

/// Smooth 0..1 bump over `[0, 1)`.
fn bump(phase: f64) -> f64 {
    if (0.0..1.0).contains(&phase) {
        (std::f64::consts::PI * phase).sin().powi(2)
    } else {
        0.0
    }
}

/// Generates one recording with stage marks at the first sample of each
/// phase.
pub fn generate_recording(subject_id: &str, group: Group, hand: Hand, spec: &CohortSpec) -> Result<Recording> {
    spec.validate()?;
    let p = spec.profile(group);
    let traits = subject_traits(spec, subject_id, p);
    let mut rng = substream(spec.seed, &[subject_id, hand.dir_name()]);
    let fs = spec.fs;
    let counts = sample_counts(&spec.timing, fs);
    let n: usize = counts.iter().sum();
    if n == 0 {
        return Err(Error::InvalidParameter("protocol has no samples".into()));
    }

    let rest = traits.level;
    let hold = traits.level * traits.gain;
    let mut level = Vec::with_capacity(n);
    let mut marks = Vec::with_capacity(5);
    for (k, &count) in counts.iter().enumerate() {
        if count == 0 {
            continue;
        }
        marks.push((level.len(), SegmentId::ALL[k]));
        match SegmentId::ALL[k] {
            SegmentId::S1Relaxation => level.extend(std::iter::repeat_n(rest, count)),
            SegmentId::S2PrepContraction => {
                level.extend((0..count).map(|i| rest + (hold - rest) * (i as f64 / count as f64)))
            }
            SegmentId::S3HoldContraction => level.extend(std::iter::repeat_n(hold, count)),
            SegmentId::S4PrepRepetitions => {
                level.extend((0..count).map(|i| hold + (rest - hold) * (i as f64 / count as f64)))
            }
            SegmentId::S5Repetitions => {
                let period = (5.0 * fs).round() as usize;
                let mut seg = vec![rest; count];
                let mut start = 0usize;
                while start < count {
                    let jitter = p.burst_irregularity * fs * rng.random_range(-0.5..=0.5);
                    let amp = 1.0 + p.burst_irregularity * rng.random_range(-0.5..=0.5);
                    let width = 0.6 * period as f64;
                    let onset = start as f64 + 0.2 * period as f64 + jitter;
                    for (i, v) in seg.iter_mut().enumerate().skip(start).take(period) {
                        *v += (hold - rest) * amp * bump((i as f64 - onset) / width);
                    }
                    start += period;
                }
                level.extend(seg);
            }
        }
    }

    let mut colored: f64 = StandardNormal.sample(&mut rng);
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let rho = (-1.0 / (fs * spec.drift_time_s)).exp();
    let drift_step = spec.level_drift * (1.0 - rho * rho).sqrt();
    let mut drift: f64 = spec.level_drift * rng.sample::<f64, _>(StandardNormal);
    let mut times = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    for (i, &l) in level.iter().enumerate() {
        let t = i as f64 / fs;
        let e: f64 = StandardNormal.sample(&mut rng);
        let corner = traits.noise_corner_hz * (l / rest).powf(spec.corner_exponent);
        let a = (-std::f64::consts::TAU * corner / fs).exp();
        colored = a * colored + (1.0 - a * a).sqrt() * e;
        let modulation = if traits.tremor_freq > 0.0 {
            1.0 + traits.tremor_depth * (std::f64::consts::TAU * traits.tremor_freq * t + phase).sin()
        } else {
            1.0
        };
        drift = rho * drift + drift_step * rng.sample::<f64, _>(StandardNormal);
        let l = l * drift.exp();
        let s = traits.envelope_log_sd * rest / l;
        let z = colored.clamp(-NOISE_CLIP, NOISE_CLIP);
        let w: f64 = rng.sample::<f64, _>(StandardNormal).clamp(-NOISE_CLIP, NOISE_CLIP);
        times.push(t);
        values.push(l * (modulation * (s * z - 0.5 * s * s).exp() + p.broadband * w));
    }
    let stage_marks = marks
        .into_iter()
        .map(|(i, stage)| StageMark { t: times[i], stage })
        .collect();
    Ok(Recording {
        subject_id: subject_id.to_string(),
        group,
        hand,
        sampling_rate_hz: fs,
        times,
        values,
        stage_marks: Some(stage_marks),
    })
}

/// Every subject of the cohort, both hands, in manifest order.
pub fn generate_recordings(spec: &CohortSpec) -> Result<Vec<Recording>> {
    spec.validate()?;
    let jobs: Vec<(String, Group, Hand)> = spec
        .subjects()
        .into_iter()
        .flat_map(|(s, g)| [Hand::Left, Hand::Right].map(|h| (s.clone(), g, h)))
        .collect();
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        jobs.par_iter()
            .map(|(s, g, h)| generate_recording(s, *g, *h, spec))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        jobs.iter()
            .map(|(s, g, h)| generate_recording(s, *g, *h, spec))
            .collect()
    }
}

fn relative_path(r: &Recording) -> String {
    format!("{}/{}/{}.csv", r.group.dir_name(), r.hand.dir_name(), r.subject_id)
}

/// Writes `<out>/{pd,healthy}/{left,right}/<subject>.csv` plus
/// `manifest.json`. `provenance` is stored verbatim in the manifest.
pub fn generate_cohort(spec: &CohortSpec, out_dir: &Path, provenance: serde_json::Value) -> Result<Manifest> {
    let recordings = generate_recordings(spec)?;
    let mut entries = Vec::with_capacity(recordings.len());
    for r in &recordings {
        let rel = relative_path(r);
        let path = out_dir.join(&rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        std::fs::write(&path, recording_to_csv(r)?).map_err(|e| Error::io(&path, e))?;
        entries.push(ManifestEntry {
            subject_id: r.subject_id.clone(),
            group: r.group,
            hand: r.hand,
            path: rel,
        });
    }
    let manifest = Manifest {
        provenance,
        sampling_rate_hz: spec.fs,
        entries,
    };
    let path = out_dir.join(MANIFEST_FILE);
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::stats::rms;
    use crate::signal_io::{segment, validate};

    fn short_spec() -> CohortSpec {
        CohortSpec {
            n_pd: 1,
            n_healthy: 1,
            seed: 9,
            ..CohortSpec::default()
        }
    }

    #[test]
    fn deterministic_and_hand_specific() {
        let spec = short_spec();
        let a = generate_recording("pd01", Group::Pd, Hand::Left, &spec).unwrap();
        let b = generate_recording("pd01", Group::Pd, Hand::Left, &spec).unwrap();
        let c = generate_recording("pd01", Group::Pd, Hand::Right, &spec).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.values, c.values);
        assert_eq!(a.len(), 100_000);
    }

    #[test]
    fn marks_delimit_segments_and_validation_passes() {
        let spec = short_spec();
        let r = generate_recording("hc01", Group::Healthy, Hand::Right, &spec).unwrap();
        let marks = r.stage_marks.as_ref().unwrap();
        let starts: Vec<f64> = marks.iter().map(|m| m.t).collect();
        assert_eq!(starts, vec![0.0, 30.0, 35.0, 65.0, 70.0]);
        let segs = segment(&r, &ProtocolTiming::default()).unwrap();
        assert_eq!(segs[&SegmentId::S3HoldContraction], 35_000..65_000);
        let v = validate(&r, 6.0).unwrap();
        assert!(v.passed, "{v:?}");
        let s1 = rms(&r.values[segs[&SegmentId::S1Relaxation].clone()]).unwrap();
        let s3 = rms(&r.values[segs[&SegmentId::S3HoldContraction].clone()]).unwrap();
        assert!(s1 < s3);
    }

    #[test]
    fn invalid_specs() {
        let mut spec = short_spec();
        spec.n_pd = 0;
        assert!(spec.validate().is_err());
        let mut spec = short_spec();
        spec.pd_profile.tremor_depth = 1.5;
        assert!(spec.validate().is_err());
        let mut spec = short_spec();
        spec.fs = 0.0;
        assert!(generate_recording("x", Group::Pd, Hand::Left, &spec).is_err());
    }
}

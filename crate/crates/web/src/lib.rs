//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every operation takes plain numbers and returns a JSON string; the page
//! does all drawing. The `*_json` functions are the native entry points and
//! are what the tests exercise.

use semgcn::eval::{metrics, ConfusionMatrix};
use semgcn::features::{extract_features, mean_frequency, median_frequency, power_spectrum, FeatureConfig};
use semgcn::signal_io::{segment, Group, Hand, ProtocolTiming, Recording, SegmentId};
use semgcn::synth::{generate_recording, CohortSpec};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Trace columns sent to the page.
pub const TRACE_COLUMNS: usize = 600;
/// Spectrum points sent to the page.
pub const SPECTRUM_POINTS: usize = 500;

fn err(e: semgcn::Error) -> String {
    e.to_string()
}

fn demo_recording(seed: u64, pd: bool, left: bool) -> Result<Recording, String> {
    let group = if pd { Group::Pd } else { Group::Healthy };
    let hand = if left { Hand::Left } else { Hand::Right };
    let spec = CohortSpec {
        seed,
        ..Default::default()
    };
    generate_recording("demo01", group, hand, &spec).map_err(err)
}

/// Min/max envelope, one entry per column.
fn envelope(r: &Recording, cols: usize) -> Value {
    let n = r.len();
    let cols = cols.min(n);
    let (mut t, mut lo, mut hi) = (Vec::new(), Vec::new(), Vec::new());
    for c in 0..cols {
        let chunk = &r.values[c * n / cols..(c + 1) * n / cols];
        t.push(r.times[c * n / cols]);
        lo.push(chunk.iter().copied().fold(f64::INFINITY, f64::min));
        hi.push(chunk.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    }
    json!({ "t": t, "lo": lo, "hi": hi })
}

/// A synthetic recording: decimated trace, protocol segments, and all
/// features of a 1 s window at the center of each segment.
pub fn recording_json(seed: u64, pd: bool, left: bool) -> Result<String, String> {
    let r = demo_recording(seed, pd, left)?;
    let segs = segment(&r, &ProtocolTiming::default()).map_err(err)?;
    let window = r.sampling_rate_hz as usize;
    let mut segments = Vec::new();
    for (id, range) in &segs {
        let mid = (range.start + range.end) / 2;
        let start = mid.saturating_sub(window / 2).max(range.start);
        let end = (start + window).min(range.end);
        let features =
            extract_features(&r.values[start..end], r.sampling_rate_hz, &FeatureConfig::default()).map_err(err)?;
        segments.push(json!({
            "id": id.to_string(),
            "start_s": r.times[range.start],
            "end_s": r.times.get(range.end).copied().unwrap_or(r.duration_s()),
            "features": features,
        }));
    }
    let out = json!({
        "group": r.group.to_string(),
        "hand": r.hand.to_string(),
        "fs": r.sampling_rate_hz,
        "duration_s": r.duration_s(),
        "trace": envelope(&r, TRACE_COLUMNS),
        "segments": segments,
    });
    Ok(out.to_string())
}

/// Power spectrum of one protocol segment (1-5), averaged into at most
/// `SPECTRUM_POINTS` bins below `max_hz`.
pub fn spectrum_json(seed: u64, pd: bool, left: bool, segment_number: u8, max_hz: f64) -> Result<String, String> {
    let id =
        SegmentId::from_number(segment_number).ok_or_else(|| format!("segment must be 1-5, got {segment_number}"))?;
    let r = demo_recording(seed, pd, left)?;
    let range = segment(&r, &ProtocolTiming::default()).map_err(err)?[&id].clone();
    let s = power_spectrum(&r.values[range], r.sampling_rate_hz).map_err(err)?;
    let keep = s.freqs.iter().take_while(|&&f| f <= max_hz).count().max(1);
    let points = SPECTRUM_POINTS.min(keep);
    let floor = s.total_power() * 1e-12;
    let (mut freqs, mut log_power) = (Vec::new(), Vec::new());
    for c in 0..points {
        let (a, b) = (c * keep / points, (c + 1) * keep / points);
        freqs.push(s.freqs[a..b].iter().sum::<f64>() / (b - a) as f64);
        let p = s.power[a..b].iter().sum::<f64>() / (b - a) as f64;
        log_power.push(p.max(floor).log10());
    }
    let out = json!({
        "segment": id.to_string(),
        "freqs": freqs,
        "log10_power": log_power,
        "mdf": median_frequency(&s).map_err(err)?,
        "mean_freq": mean_frequency(&s).map_err(err)?,
        "peak_hz": s.peak_frequency(),
    });
    Ok(out.to_string())
}

/// Metrics of a confusion matrix with rows = true class, columns =
/// predicted class, healthy first.
pub fn metrics_json(hh: u32, hp: u32, ph: u32, pp: u32) -> Result<String, String> {
    let cm = ConfusionMatrix {
        counts: [[hh.into(), hp.into()], [ph.into(), pp.into()]],
    };
    let m = metrics(&cm).map_err(err)?;
    serde_json::to_string(&m).map_err(|e| e.to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn synth_recording(seed: u32, pd: bool, left: bool) -> Result<String, JsError> {
    js(recording_json(seed.into(), pd, left))
}

#[wasm_bindgen]
pub fn segment_spectrum(seed: u32, pd: bool, left: bool, segment_number: u8, max_hz: f64) -> Result<String, JsError> {
    js(spectrum_json(seed.into(), pd, left, segment_number, max_hz))
}

#[wasm_bindgen]
pub fn confusion_metrics(hh: u32, hp: u32, ph: u32, pp: u32) -> Result<String, JsError> {
    js(metrics_json(hh, hp, ph, pp))
}

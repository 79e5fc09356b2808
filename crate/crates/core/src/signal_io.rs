//! Recording ingestion: CSV parsing, validation, protocol segmentation and
//! windowing, plus the on-disk cohort layout
//! `<root>/{pd,healthy}/{left,right}/<subject>.csv`.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance on successive timestamp deltas.
pub const INTERVAL_TOLERANCE: f64 = 0.05;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Healthy,
    Pd,
}

impl Group {
    /// Class index used by the classifiers: Healthy = 0, PD = 1.
    pub fn class_index(self) -> usize {
        match self {
            Group::Healthy => 0,
            Group::Pd => 1,
        }
    }

    pub fn from_class_index(i: usize) -> Option<Group> {
        match i {
            0 => Some(Group::Healthy),
            1 => Some(Group::Pd),
            _ => None,
        }
    }

    pub fn dir_name(self) -> &'static str {
        match self {
            Group::Healthy => "healthy",
            Group::Pd => "pd",
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::Healthy => "Healthy",
            Group::Pd => "PD",
        })
    }
}

impl FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pd" => Ok(Group::Pd),
            "healthy" => Ok(Group::Healthy),
            other => Err(Error::InvalidInput(format!("unknown group `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hand {
    Left,
    Right,
}

impl Hand {
    pub fn dir_name(self) -> &'static str {
        match self {
            Hand::Left => "left",
            Hand::Right => "right",
        }
    }
}

impl fmt::Display for Hand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.dir_name())
    }
}

impl FromStr for Hand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "left" => Ok(Hand::Left),
            "right" => Ok(Hand::Right),
            other => Err(Error::InvalidInput(format!("unknown hand `{other}`"))),
        }
    }
}

/// The five protocol phases visible in a recording, in order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SegmentId {
    S1Relaxation,
    S2PrepContraction,
    S3HoldContraction,
    S4PrepRepetitions,
    S5Repetitions,
}

impl SegmentId {
    pub const ALL: [SegmentId; 5] = [
        SegmentId::S1Relaxation,
        SegmentId::S2PrepContraction,
        SegmentId::S3HoldContraction,
        SegmentId::S4PrepRepetitions,
        SegmentId::S5Repetitions,
    ];

    /// Segments used for analysis by default (relaxation, hold, repetitions).
    pub const ANALYZED: [SegmentId; 3] = [
        SegmentId::S1Relaxation,
        SegmentId::S3HoldContraction,
        SegmentId::S5Repetitions,
    ];

    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_number(n: u8) -> Option<SegmentId> {
        SegmentId::ALL.get(usize::from(n).checked_sub(1)?).copied()
    }
}

impl fmt::Display for SegmentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S{}", self.number())
    }
}

impl FromStr for SegmentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digits = s.trim().trim_start_matches(['S', 's']);
        digits
            .parse::<u8>()
            .ok()
            .and_then(SegmentId::from_number)
            .ok_or_else(|| Error::InvalidInput(format!("unknown segment `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageMark {
    pub t: f64,
    pub stage: SegmentId,
}

/// Metadata that accompanies a CSV file; it is not stored in the file itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordingMeta {
    pub subject_id: String,
    pub group: Group,
    pub hand: Hand,
    /// When `None` the rate is estimated as `1 / median(dt)`.
    pub sampling_rate_hz: Option<f64>,
}

/// One subject/hand session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recording {
    pub subject_id: String,
    pub group: Group,
    pub hand: Hand,
    pub sampling_rate_hz: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub stage_marks: Option<Vec<StageMark>>,
}

impl Recording {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        match (self.times.first(), self.times.last()) {
            (Some(a), Some(b)) => b - a + 1.0 / self.sampling_rate_hz,
            _ => 0.0,
        }
    }

    /// Per-sample stage numbers reconstructed from the marks.
    pub fn stage_column(&self) -> Option<Vec<SegmentId>> {
        let marks = self.stage_marks.as_ref()?;
        let mut out = Vec::with_capacity(self.len());
        let mut next = 0;
        let mut current = marks.first()?.stage;
        for &t in &self.times {
            while next < marks.len() && marks[next].t <= t {
                current = marks[next].stage;
                next += 1;
            }
            out.push(current);
        }
        Some(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub outlier_count: usize,
    pub discontinuity_count: usize,
    pub passed: bool,
}

fn parse_field<T: FromStr>(record: &csv::StringRecord, idx: usize, line: usize, name: &str) -> Result<T> {
    let raw = record.get(idx).ok_or_else(|| Error::Parse {
        line,
        message: format!("missing field `{name}`"),
    })?;
    raw.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("cannot parse `{raw}` as {name}"),
    })
}

/// Parses a `t_s,emg_au[,stage]` CSV.
pub fn load_recording(csv_bytes: &[u8], meta: &RecordingMeta) -> Result<Recording> {
    if csv_bytes.iter().all(|b| b.is_ascii_whitespace()) {
        return Err(Error::EmptyInput("CSV file is empty".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(csv_bytes);
    let headers = reader.headers()?.clone();
    let column = |name: &'static str| headers.iter().position(|h| h == name);
    let t_col = column("t_s").ok_or(Error::MissingColumn("t_s"))?;
    let v_col = column("emg_au").ok_or(Error::MissingColumn("emg_au"))?;
    let stage_col = column("stage");

    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut marks: Vec<StageMark> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let t: f64 = parse_field(&record, t_col, line, "t_s")?;
        let v: f64 = parse_field(&record, v_col, line, "emg_au")?;
        if !t.is_finite() || !v.is_finite() {
            return Err(Error::Parse {
                line,
                message: "non-finite value".into(),
            });
        }
        if let Some(&prev) = times.last() {
            if t <= prev {
                return Err(Error::Ordering { line });
            }
        }
        if let Some(sc) = stage_col {
            let n: u8 = parse_field(&record, sc, line, "stage")?;
            let stage = SegmentId::from_number(n).ok_or_else(|| Error::Parse {
                line,
                message: format!("stage {n} outside 1..=5"),
            })?;
            if marks.last().is_none_or(|m| m.stage != stage) {
                marks.push(StageMark { t, stage });
            }
        }
        times.push(t);
        values.push(v);
    }
    if values.is_empty() {
        return Err(Error::EmptyInput("CSV has a header but no samples".into()));
    }

    let sampling_rate_hz = match meta.sampling_rate_hz {
        Some(fs) if fs > 0.0 && fs.is_finite() => fs,
        Some(fs) => return Err(Error::InvalidParameter(format!("sampling rate {fs}"))),
        None => estimate_sampling_rate(&times)?,
    };

    Ok(Recording {
        subject_id: meta.subject_id.clone(),
        group: meta.group,
        hand: meta.hand,
        sampling_rate_hz,
        times,
        values,
        stage_marks: stage_col.map(|_| marks),
    })
}

fn estimate_sampling_rate(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::InsufficientData(
            "need two samples to estimate the sampling rate".into(),
        ));
    }
    let mut deltas: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    deltas.sort_by(f64::total_cmp);
    let mid = deltas.len() / 2;
    let median = if deltas.len().is_multiple_of(2) {
        0.5 * (deltas[mid - 1] + deltas[mid])
    } else {
        deltas[mid]
    };
    Ok(1.0 / median)
}

/// Writes the recording in the same CSV schema `load_recording` reads.
pub fn write_recording<W: Write>(r: &Recording, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let stages = r.stage_column();
    if stages.is_some() {
        w.write_record(["t_s", "emg_au", "stage"])?;
    } else {
        w.write_record(["t_s", "emg_au"])?;
    }
    for i in 0..r.len() {
        let t = r.times[i].to_string();
        let v = r.values[i].to_string();
        match &stages {
            Some(s) => w.write_record([t, v, s[i].number().to_string()])?,
            None => w.write_record([t, v])?,
        }
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn recording_to_csv(r: &Recording) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_recording(r, &mut buf)?;
    Ok(buf)
}

/// Flags samples further than `outlier_sigma` population SDs from the mean
/// and timestamp deltas outside ±5% of the nominal interval.
pub fn validate(r: &Recording, outlier_sigma: f64) -> Result<ValidationReport> {
    if !(outlier_sigma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "outlier_sigma must be > 0 (got {outlier_sigma})"
        )));
    }
    if r.len() < 2 {
        return Err(Error::InsufficientData("validation needs at least 2 samples".into()));
    }
    let n = r.len() as f64;
    let mean = r.values.iter().sum::<f64>() / n;
    let var = r.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    let outlier_count = if sd > 0.0 {
        r.values
            .iter()
            .filter(|v| (*v - mean).abs() > outlier_sigma * sd)
            .count()
    } else {
        0
    };

    let nominal = 1.0 / r.sampling_rate_hz;
    let discontinuity_count = r
        .times
        .windows(2)
        .filter(|w| ((w[1] - w[0]) - nominal).abs() > INTERVAL_TOLERANCE * nominal)
        .count();

    Ok(ValidationReport {
        outlier_count,
        discontinuity_count,
        passed: outlier_count == 0 && discontinuity_count == 0,
    })
}

/// Stage durations used when a recording carries no stage marks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolTiming {
    pub relax_s: f64,
    pub prep_contraction_s: f64,
    pub hold_s: f64,
    pub prep_repetitions_s: f64,
    pub repetitions_s: f64,
}

impl Default for ProtocolTiming {
    fn default() -> Self {
        Self {
            relax_s: 30.0,
            prep_contraction_s: 5.0,
            hold_s: 30.0,
            prep_repetitions_s: 5.0,
            repetitions_s: 30.0,
        }
    }
}

impl ProtocolTiming {
    /// `(segment, start_s, end_s)` relative to the first sample.
    pub fn bounds(&self) -> [(SegmentId, f64, f64); 5] {
        let durations = [
            self.relax_s,
            self.prep_contraction_s,
            self.hold_s,
            self.prep_repetitions_s,
            self.repetitions_s,
        ];
        let mut start = 0.0;
        let mut out = [(SegmentId::S1Relaxation, 0.0, 0.0); 5];
        for (i, d) in durations.into_iter().enumerate() {
            out[i] = (SegmentId::ALL[i], start, start + d);
            start += d;
        }
        out
    }

    pub fn total_s(&self) -> f64 {
        self.bounds()[4].2
    }
}

/// Sample-index ranges per segment.
pub type Segments = BTreeMap<SegmentId, Range<usize>>;

/// Splits a recording into its protocol phases. Stage marks win over the
/// timing defaults when present.
pub fn segment(r: &Recording, protocol: &ProtocolTiming) -> Result<Segments> {
    let mut out = Segments::new();
    match &r.stage_marks {
        Some(marks) if !marks.is_empty() => {
            for (k, mark) in marks.iter().enumerate() {
                let start = r.times.partition_point(|&t| t < mark.t);
                let end = marks
                    .get(k + 1)
                    .map_or(r.len(), |next| r.times.partition_point(|&t| t < next.t));
                if end > start {
                    // A stage appearing twice keeps its first occurrence.
                    out.entry(mark.stage).or_insert(start..end);
                }
            }
            for required in SegmentId::ANALYZED {
                if !out.contains_key(&required) {
                    return Err(Error::TruncatedRecording(required.to_string()));
                }
            }
        }
        _ => {
            if r.is_empty() {
                return Err(Error::EmptyInput("recording has no samples".into()));
            }
            let t0 = r.times[0];
            let dt = 1.0 / r.sampling_rate_hz;
            let covered = r.duration_s();
            for (id, start, end) in protocol.bounds() {
                if end - start <= 0.0 {
                    if SegmentId::ANALYZED.contains(&id) {
                        return Err(Error::InvalidParameter(format!(
                            "segment {id} has non-positive duration"
                        )));
                    }
                    continue;
                }
                if covered + 0.5 * dt < end {
                    return Err(Error::TruncatedRecording(id.to_string()));
                }
                let a = r.times.partition_point(|&t| t - t0 < start);
                let b = r.times.partition_point(|&t| t - t0 < end);
                out.insert(id, a..b);
            }
        }
    }
    Ok(out)
}

/// Window length and hop (in samples) for the given parameters.
pub fn window_geometry(window_s: f64, overlap_fraction: f64, fs: f64) -> Result<(usize, usize)> {
    if !(0.0..1.0).contains(&overlap_fraction) {
        return Err(Error::InvalidParameter(format!(
            "overlap fraction must be in [0, 1) (got {overlap_fraction})"
        )));
    }
    if !(fs > 0.0) || !(window_s > 0.0) {
        return Err(Error::InvalidParameter("window length and fs must be positive".into()));
    }
    let len = (window_s * fs).floor() as usize;
    if len < 16 {
        return Err(Error::InvalidParameter(format!(
            "window of {len} samples is shorter than the 16-sample minimum"
        )));
    }
    let hop = ((window_s * fs * (1.0 - overlap_fraction)).floor() as usize).max(1);
    Ok((len, hop))
}

/// Start offsets of every full window in a slice of `n` samples.
pub fn window_starts(n: usize, len: usize, hop: usize) -> Vec<usize> {
    if n < len {
        return Vec::new();
    }
    (0..=(n - len) / hop).map(|i| i * hop).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub subject_id: String,
    pub hand: Hand,
    pub segment: SegmentId,
    pub start_t: f64,
    pub values: Vec<f64>,
    pub label: Group,
}

/// Cuts fixed-length windows out of one segment of a recording. A trailing
/// remainder shorter than one window is dropped.
pub fn make_windows(
    r: &Recording,
    segment: SegmentId,
    range: Range<usize>,
    window_s: f64,
    overlap_fraction: f64,
) -> Result<Vec<Window>> {
    let (len, hop) = window_geometry(window_s, overlap_fraction, r.sampling_rate_hz)?;
    let slice = &r.values[range.clone()];
    Ok(window_starts(slice.len(), len, hop)
        .into_iter()
        .map(|s| Window {
            subject_id: r.subject_id.clone(),
            hand: r.hand,
            segment,
            start_t: r.times[range.start + s],
            values: slice[s..s + len].to_vec(),
            label: r.group,
        })
        .collect())
}

/// Segments a recording and windows the requested phases, in phase order.
pub fn recording_windows(
    r: &Recording,
    protocol: &ProtocolTiming,
    phases: &[SegmentId],
    window_s: f64,
    overlap_fraction: f64,
) -> Result<Vec<Window>> {
    let segments = segment(r, protocol)?;
    let mut out = Vec::new();
    for (id, range) in segments {
        if phases.contains(&id) {
            out.extend(make_windows(r, id, range, window_s, overlap_fraction)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub subject_id: String,
    pub group: Group,
    pub hand: Hand,
    /// Relative to the dataset root, `/`-separated.
    pub path: String,
}

/// Cohort index written next to a generated dataset tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub provenance: serde_json::Value,
    pub sampling_rate_hz: f64,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn read(root: &Path) -> Result<Option<Manifest>> {
        let path = root.join(MANIFEST_FILE);
        if !path.is_file() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Some(serde_json::from_str(&text)?))
    }
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut entries = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<Vec<_>>>()?;
    entries.sort();
    Ok(entries)
}

/// Loads every `<root>/{pd,healthy}/{left,right}/*.csv`, in lexicographic
/// path order. Sampling rates come from `manifest.json` when present.
pub fn load_dataset(root: &Path) -> Result<Vec<Recording>> {
    let manifest = Manifest::read(root)?;
    let fs = manifest.as_ref().map(|m| m.sampling_rate_hz);
    let mut out = Vec::new();
    for group_dir in sorted_entries(root)? {
        if !group_dir.is_dir() {
            continue;
        }
        let group = dir_name(&group_dir)
            .and_then(|n| n.parse::<Group>().ok())
            .ok_or_else(|| Error::Layout(group_dir.clone()))?;
        for hand_dir in sorted_entries(&group_dir)? {
            if !hand_dir.is_dir() {
                continue;
            }
            let hand = dir_name(&hand_dir)
                .and_then(|n| n.parse::<Hand>().ok())
                .ok_or_else(|| Error::Layout(hand_dir.clone()))?;
            for file in sorted_entries(&hand_dir)? {
                if file.extension().and_then(|e| e.to_str()) != Some("csv") {
                    continue;
                }
                let subject_id = file
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .ok_or_else(|| Error::Layout(file.clone()))?
                    .to_string();
                let bytes = std::fs::read(&file).map_err(|e| Error::io(&file, e))?;
                let meta = RecordingMeta {
                    subject_id,
                    group,
                    hand,
                    sampling_rate_hz: fs,
                };
                let rec = load_recording(&bytes, &meta).map_err(|e| match e {
                    Error::Io { .. } => e,
                    other => Error::InvalidInput(format!("{}: {other}", file.display())),
                })?;
                out.push(rec);
            }
        }
    }
    Ok(out)
}

fn dir_name(p: &Path) -> Option<&str> {
    p.file_name().and_then(|n| n.to_str())
}

//! Windowed feature tables: recordings in, one labeled feature row per
//! window out, with the fixed-order CSV interchange format.

use std::io::Write;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{extract_many, FeatureConfig, FeatureVector, ALL_FEATURES, MODEL_FEATURES};
use crate::signal_io::{recording_windows, Group, Hand, ProtocolTiming, Recording, SegmentId};

/// Trailing metadata columns of the feature CSV.
pub const META_COLUMNS: [&str; 4] = ["label", "subject", "hand", "segment"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowingConfig {
    pub window_s: f64,
    pub overlap: f64,
    pub phases: Vec<SegmentId>,
    pub protocol: ProtocolTiming,
}

impl Default for WindowingConfig {
    fn default() -> Self {
        Self {
            window_s: 1.0,
            overlap: 0.5,
            phases: SegmentId::ANALYZED.to_vec(),
            protocol: ProtocolTiming::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub features: FeatureVector,
    pub label: Group,
    pub subject: String,
    pub hand: Hand,
    pub segment: SegmentId,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    pub rows: Vec<FeatureRow>,
}

/// Windows every recording and extracts features, preserving recording and
/// window order.
pub fn extract_table(
    recordings: &[Recording],
    windowing: &WindowingConfig,
    cfg: &FeatureConfig,
) -> Result<FeatureTable> {
    let mut rows = Vec::new();
    for r in recordings {
        let windows = recording_windows(
            r,
            &windowing.protocol,
            &windowing.phases,
            windowing.window_s,
            windowing.overlap,
        )
        .map_err(|e| Error::InvalidInput(format!("{} ({}): {e}", r.subject_id, r.hand)))?;
        let feats = extract_many(windows.iter().map(|w| w.values.as_slice()), r.sampling_rate_hz, cfg)?;
        rows.extend(windows.into_iter().zip(feats).map(|(w, features)| FeatureRow {
            features,
            label: w.label,
            subject: w.subject_id,
            hand: w.hand,
            segment: w.segment,
        }));
    }
    Ok(FeatureTable { rows })
}

/// Model inputs of a table with degenerate rows removed.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelData {
    pub x: Array2<f64>,
    pub labels: Vec<usize>,
    pub subjects: Vec<String>,
    /// Row index in the source table of each retained row.
    pub source_rows: Vec<usize>,
    pub dropped: usize,
}

impl FeatureTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// The nine classifier features per row. Rows with any non-finite model
    /// feature are dropped and counted.
    pub fn model_data(&self) -> Result<ModelData> {
        let mut flat = Vec::with_capacity(self.rows.len() * MODEL_FEATURES.len());
        let mut labels = Vec::new();
        let mut subjects = Vec::new();
        let mut source_rows = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            let f = row.features.model_features();
            if f.iter().all(|v| v.is_finite()) {
                flat.extend_from_slice(&f);
                labels.push(row.label.class_index());
                subjects.push(row.subject.clone());
                source_rows.push(i);
            }
        }
        if labels.is_empty() {
            return Err(Error::EmptyInput("no usable feature rows".into()));
        }
        let x = Array2::from_shape_vec((labels.len(), MODEL_FEATURES.len()), flat)
            .map_err(|e| Error::Dimension(e.to_string()))?;
        Ok(ModelData {
            x,
            dropped: self.rows.len() - labels.len(),
            labels,
            subjects,
            source_rows,
        })
    }

    /// Writes the CSV with optional leading `#` comment lines.
    pub fn write_csv<W: Write>(&self, mut out: W, comments: &[String]) -> Result<()> {
        for c in comments {
            for line in c.lines() {
                writeln!(out, "# {line}").map_err(|e| Error::io("<feature csv>", e))?;
            }
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(ALL_FEATURES.iter().chain(META_COLUMNS.iter()))?;
        for row in &self.rows {
            // Unavailable values are empty cells.
            let mut rec: Vec<String> = row
                .features
                .all_features()
                .iter()
                .map(|v| if v.is_nan() { String::new() } else { v.to_string() })
                .collect();
            rec.push(row.label.dir_name().to_string());
            rec.push(row.subject.clone());
            rec.push(row.hand.to_string());
            rec.push(row.segment.to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<feature csv>", e))?;
        Ok(())
    }

    /// Reads the CSV written by [`FeatureTable::write_csv`], skipping `#`
    /// comment lines. Missing values are read back as NaN.
    pub fn read_csv(bytes: &[u8]) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(bytes);
        let headers = reader.headers()?.clone();
        let expected: Vec<&str> = ALL_FEATURES.iter().chain(META_COLUMNS.iter()).copied().collect();
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::InvalidInput(format!(
                "feature CSV header must be `{}`",
                expected.join(",")
            )));
        }
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            let line = record.position().map_or(i + 2, |p| p.line() as usize);
            let parse_err = |field: &str| Error::Parse {
                line,
                message: format!("bad `{field}` value"),
            };
            let mut values = [f64::NAN; 14];
            for (k, name) in ALL_FEATURES.iter().enumerate() {
                let raw = record.get(k).unwrap_or("");
                values[k] = if raw.is_empty() {
                    f64::NAN
                } else {
                    raw.parse().map_err(|_| parse_err(name))?
                };
            }
            let meta = |k: usize| record.get(ALL_FEATURES.len() + k).unwrap_or("");
            let mut features = FeatureVector::from_all_features(values);
            features.unavailable = ALL_FEATURES
                .iter()
                .zip(values)
                .filter(|(_, v)| v.is_nan())
                .map(|(n, _)| n.to_string())
                .collect();
            rows.push(FeatureRow {
                features,
                label: meta(0).parse().map_err(|_| parse_err("label"))?,
                subject: meta(1).to_string(),
                hand: meta(2).parse().map_err(|_| parse_err("hand"))?,
                segment: meta(3).parse().map_err(|_| parse_err("segment"))?,
            });
        }
        Ok(Self { rows })
    }
}

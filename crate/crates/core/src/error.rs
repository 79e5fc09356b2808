use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("missing column `{0}`")]
    MissingColumn(&'static str),

    #[error("timestamps not strictly increasing at line {line}")]
    Ordering { line: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("recording truncated: segment {0} is not fully covered")]
    TruncatedRecording(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dataset layout: unexpected directory `{}`", .0.display())]
    Layout(PathBuf),

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("undefined spectrum: total power is zero")]
    UndefinedSpectrum,

    #[error("degenerate tolerance: r must be > 0 (got {0})")]
    DegenerateTolerance(f64),

    #[error("undefined scaling: fewer than 2 radii with 0 < C(r) < 1")]
    UndefinedScaling,

    #[error("degenerate feature: column {index} (`{name}`) is constant")]
    DegenerateFeature { index: usize, name: String },

    #[error("feature `{feature}`: {source}")]
    Feature {
        feature: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("empty training mask")]
    EmptyMask,

    #[error("optimizer diverged: non-finite gradient")]
    Divergence,

    #[error("degenerate labels: both classes must be present")]
    DegenerateLabels,

    #[error("stratification: class {class} has {count} samples, fewer than k = {k}")]
    Stratification { class: String, count: usize, k: usize },

    #[error("insufficient graph: need at least 2 nodes")]
    InsufficientGraph,

    #[error("unknown format `{0}`")]
    UnknownFormat(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_feature(feature: &'static str, source: Error) -> Self {
        Error::Feature {
            feature,
            source: Box::new(source),
        }
    }
}

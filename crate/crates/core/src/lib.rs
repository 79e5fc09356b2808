//! Surface-EMG severity classification toolkit: recording ingestion, linear
//! and nonlinear window features, KNN feature graphs, a three-layer GCN with
//! an SVM head, and stratified cross-validation.

// `!(x > 0.0)` is used on purpose: it rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checkpoint;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod features;
pub mod gcn;
pub mod graph;
pub mod signal_io;
pub mod svm;
pub mod synth;

pub use error::{Error, Result};

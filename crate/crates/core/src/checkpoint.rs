//! Versioned JSON container for trained models. One format covers all
//! three pipelines; `kind` says which parameter blocks are present.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::dataset::ModelData;
use crate::error::{Error, Result};
use crate::eval::{knn_operator, CvConfig, Pipeline};
use crate::features::{Standardizer, MODEL_FEATURES};
use crate::gcn::{self, GcnParams, TrainConfig};
use crate::svm::{classes_from_targets, targets_from_classes, train_svm, SvmModel};

pub const CHECKPOINT_FORMAT: &str = "semgcn-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub kind: Pipeline,
    pub seed: u64,
    pub config: CvConfig,
    /// Fitted on the training rows; applied to every prediction input.
    pub standardizer: Standardizer,
    pub gcn: Option<GcnParams>,
    /// For `gcn-svm` the SVM lives in the GCN's second hidden layer.
    pub svm: Option<SvmModel>,
    pub n_train: usize,
    /// Free-form run metadata supplied by the caller.
    #[serde(default)]
    pub provenance: serde_json::Value,
}

fn names(d: usize) -> &'static [&'static str] {
    if d == MODEL_FEATURES.len() {
        &MODEL_FEATURES
    } else {
        &[]
    }
}

/// Trains `cfg.pipeline` on every row of `data`. The GCN sees one KNN graph
/// over all rows and uses `cfg.seed` for initialization and dropout.
pub fn fit(data: &ModelData, cfg: &CvConfig) -> Result<Checkpoint> {
    let labels = &data.labels;
    if labels.len() != data.x.nrows() {
        return Err(Error::Dimension(format!(
            "{} rows but {} labels",
            data.x.nrows(),
            labels.len()
        )));
    }
    if !labels.contains(&0) || !labels.contains(&1) {
        return Err(Error::DegenerateLabels);
    }
    let (standardizer, xs) = Standardizer::fit_apply(data.x.view(), names(data.x.ncols()))?;
    let targets = targets_from_classes(labels);
    let (gcn_params, svm) = match cfg.pipeline {
        Pipeline::Svm => (None, Some(train_svm(xs.view(), &targets, &cfg.svm)?)),
        pipeline => {
            let train_cfg = TrainConfig {
                seed: cfg.seed,
                ..cfg.train.clone()
            };
            train_cfg.validate()?;
            let a = knn_operator(xs.view(), cfg.graph_k)?;
            let all = vec![true; labels.len()];
            let params = gcn::train_on(xs.view(), labels, &all, &a, &train_cfg)?.params;
            let svm = if pipeline == Pipeline::GcnSvm {
                let h = gcn::embed(&a, xs.view(), &params)?;
                Some(train_svm(h.view(), &targets, &cfg.svm)?)
            } else {
                None
            };
            (Some(params), svm)
        }
    };
    Ok(Checkpoint {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        kind: cfg.pipeline,
        seed: cfg.seed,
        config: cfg.clone(),
        standardizer,
        gcn: gcn_params,
        svm,
        n_train: labels.len(),
        provenance: serde_json::Value::Null,
    })
}

impl Checkpoint {
    /// Class indices for raw feature rows. Graph pipelines build a KNN graph
    /// over exactly the rows given, so predictions depend on the batch.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<usize>> {
        self.check()?;
        let xs = self.standardizer.apply(x)?;
        if self.kind == Pipeline::Svm {
            return self.svm.as_ref().expect("checked").predict_classes(xs.view());
        }
        let params = self.gcn.as_ref().expect("checked");
        let a = knn_operator(xs.view(), self.config.graph_k)?;
        match &self.svm {
            Some(svm) => Ok(classes_from_targets(
                &svm.predict(gcn::embed(&a, xs.view(), params)?.view())?,
            )),
            None => gcn::predict(&a, xs.view(), params),
        }
    }

    /// Format, version and kind/parameter consistency.
    pub fn check(&self) -> Result<()> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!("unknown format `{}`", self.format)));
        }
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported version {} (expected {CHECKPOINT_VERSION})",
                self.version
            )));
        }
        let want = match self.kind {
            Pipeline::Svm => (false, true),
            Pipeline::Gcn => (true, false),
            Pipeline::GcnSvm => (true, true),
        };
        if (self.gcn.is_some(), self.svm.is_some()) != want {
            return Err(Error::Checkpoint(format!(
                "parameter blocks do not match kind `{}`",
                self.kind
            )));
        }
        let d = self.standardizer.means.len();
        if let Some(p) = &self.gcn {
            p.check_shapes()?;
            if p.input_dim() != d {
                return Err(Error::Checkpoint(format!(
                    "GCN input width {} but standardizer has {d} columns",
                    p.input_dim()
                )));
            }
        }
        if let Some(svm) = &self.svm {
            let expected = match &self.gcn {
                Some(p) => p.hidden_dim(),
                None => d,
            };
            if svm.dim() != expected {
                return Err(Error::Checkpoint(format!(
                    "SVM input width {} (expected {expected})",
                    svm.dim()
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        c.check()?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn blobs() -> ModelData {
        let n = 40;
        let x = Array2::from_shape_fn((n, 3), |(i, j)| {
            let c = if i < n / 2 { -1.0 } else { 1.0 };
            c + 0.1 * (((i * 7 + j * 13) % 11) as f64 - 5.0) / 5.0
        });
        ModelData {
            x,
            labels: (0..n).map(|i| usize::from(i >= n / 2)).collect(),
            subjects: vec!["s".into(); n],
            source_rows: (0..n).collect(),
            dropped: 0,
        }
    }

    #[test]
    fn round_trip_preserves_predictions() {
        let data = blobs();
        for pipeline in [Pipeline::Svm, Pipeline::Gcn, Pipeline::GcnSvm] {
            let cfg = CvConfig {
                pipeline,
                graph_k: 5,
                seed: 3,
                ..Default::default()
            };
            let ck = fit(&data, &cfg).unwrap();
            let back = Checkpoint::from_json(&ck.to_json().unwrap()).unwrap();
            assert_eq!(back, ck);
            assert_eq!(back.predict(data.x.view()).unwrap(), ck.predict(data.x.view()).unwrap());
        }
    }

    #[test]
    fn inconsistent_checkpoints_are_rejected() {
        let ck = fit(
            &blobs(),
            &CvConfig {
                pipeline: Pipeline::Svm,
                ..Default::default()
            },
        )
        .unwrap();
        let mut bad = ck.clone();
        bad.version = 99;
        assert!(matches!(bad.check(), Err(Error::Checkpoint(_))));
        let mut bad = ck.clone();
        bad.kind = Pipeline::Gcn;
        assert!(matches!(bad.check(), Err(Error::Checkpoint(_))));
        let mut bad = ck;
        bad.format = "other".into();
        assert!(Checkpoint::from_json(&bad.to_json().unwrap()).is_err());
    }
}

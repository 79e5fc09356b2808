//! Stratified k-fold cross-validation, pooled confusion matrices,
//! classification metrics and report rendering.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::ModelData;
use crate::error::{Error, Result};
use crate::features::{Standardizer, MODEL_FEATURES};
use crate::gcn::{self, TrainConfig};
use crate::graph::{knn_graph, normalize_adjacency, PropagationOperator};
use crate::signal_io::Group;
use crate::svm::{classes_from_targets, targets_from_classes, train_svm, SvmConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    Svm,
    Gcn,
    GcnSvm,
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pipeline::Svm => "svm",
            Pipeline::Gcn => "gcn",
            Pipeline::GcnSvm => "gcn-svm",
        })
    }
}

impl FromStr for Pipeline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svm" => Ok(Pipeline::Svm),
            "gcn" => Ok(Pipeline::Gcn),
            "gcn-svm" => Ok(Pipeline::GcnSvm),
            other => Err(Error::InvalidParameter(format!("unknown pipeline `{other}`"))),
        }
    }
}

/// Fold index per sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    pub fn test_mask(&self, fold: usize) -> Vec<bool> {
        self.assignments.iter().map(|&a| a == fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

fn check_k(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("fold count must be >= 2 (got {k})")));
    }
    Ok(())
}

fn class_name(c: usize) -> String {
    Group::from_class_index(c).map_or_else(|| format!("class {c}"), |g| g.to_string())
}

/// Shuffles each class with a seeded generator, concatenates the classes in
/// index order and deals positions round-robin into `k` folds. Fold sizes
/// then differ by at most one and every class is split as evenly as
/// possible.
pub fn stratified_kfold(labels: &[usize], k: usize, seed: u64) -> Result<FoldPlan> {
    check_k(k)?;
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &c) in labels.iter().enumerate() {
        by_class.entry(c).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = vec![0; labels.len()];
    let mut position = 0;
    for (&c, members) in by_class.iter_mut() {
        if members.len() < k {
            return Err(Error::Stratification {
                class: class_name(c),
                count: members.len(),
                k,
            });
        }
        members.shuffle(&mut rng);
        for &i in members.iter() {
            assignments[i] = position % k;
            position += 1;
        }
    }
    Ok(FoldPlan { k, assignments })
}

/// Stratified folds over subjects: every sample of a subject lands in the
/// same fold. Subjects are ordered by name before shuffling.
pub fn subject_kfold(labels: &[usize], subjects: &[String], k: usize, seed: u64) -> Result<FoldPlan> {
    if labels.len() != subjects.len() {
        return Err(Error::Dimension(format!(
            "{} labels but {} subject ids",
            labels.len(),
            subjects.len()
        )));
    }
    let mut subject_label: BTreeMap<&str, usize> = BTreeMap::new();
    for (s, &c) in subjects.iter().zip(labels) {
        if *subject_label.entry(s).or_insert(c) != c {
            return Err(Error::InvalidInput(format!("subject `{s}` carries both labels")));
        }
    }
    let names: Vec<&str> = subject_label.keys().copied().collect();
    let unit_labels: Vec<usize> = subject_label.values().copied().collect();
    let units = stratified_kfold(&unit_labels, k, seed)?;
    let fold_of: BTreeMap<&str, usize> = names.into_iter().zip(units.assignments).collect();
    Ok(FoldPlan {
        k,
        assignments: subjects.iter().map(|s| fold_of[s.as_str()]).collect(),
    })
}

/// Rows are the true class (Healthy, PD), columns the prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 2]; 2],
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        self.counts[0][0] + self.counts[1][1]
    }
}

pub fn confusion(y_true: &[usize], y_pred: &[usize]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Dimension(format!(
            "{} true labels but {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::EmptyInput("no predictions to tally".into()));
    }
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t > 1 || p > 1 {
            return Err(Error::InvalidInput(format!("class index {} is not binary", t.max(p))));
        }
        cm.counts[t][p] += 1;
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub healthy: ClassMetrics,
    pub pd: ClassMetrics,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub weighted_precision: f64,
    /// Some ratio had a zero denominator and was reported as 0.
    pub undefined: bool,
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<Metrics> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyInput("confusion matrix is empty".into()));
    }
    let mut undefined = false;
    let mut ratio = |a: u64, b: u64| {
        if b == 0 {
            undefined = true;
            0.0
        } else {
            a as f64 / b as f64
        }
    };
    let mut per_class = [ClassMetrics {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
        support: 0,
    }; 2];
    for (c, m) in per_class.iter_mut().enumerate() {
        let hit = cm.counts[c][c];
        let predicted = cm.counts[0][c] + cm.counts[1][c];
        let actual = cm.counts[c][0] + cm.counts[c][1];
        m.precision = ratio(hit, predicted);
        m.recall = ratio(hit, actual);
        m.support = actual;
    }
    for m in per_class.iter_mut() {
        let denom = m.precision + m.recall;
        m.f1 = if denom > 0.0 {
            2.0 * m.precision * m.recall / denom
        } else {
            undefined = true;
            0.0
        };
    }
    let [healthy, pd] = per_class;
    Ok(Metrics {
        healthy,
        pd,
        accuracy: cm.trace() as f64 / total as f64,
        macro_f1: (healthy.f1 + pd.f1) / 2.0,
        weighted_precision: (healthy.precision * healthy.support as f64 + pd.precision * pd.support as f64)
            / total as f64,
        undefined,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub pipeline: Pipeline,
    pub k: usize,
    pub seed: u64,
    /// Neighbors per node in the KNN graph.
    pub graph_k: usize,
    /// GCN settings; the seed is replaced per fold.
    pub train: TrainConfig,
    pub svm: SvmConfig,
    pub group_by_subject: bool,
    /// Standardize and build the training graph from training nodes only.
    pub inductive: bool,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            pipeline: Pipeline::GcnSvm,
            k: 5,
            seed: 0,
            graph_k: 10,
            train: TrainConfig::default(),
            svm: SvmConfig::default(),
            group_by_subject: false,
            inductive: false,
        }
    }
}

impl CvConfig {
    pub fn fold_seed(&self, fold: usize) -> u64 {
        self.seed.wrapping_add(fold as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub pipeline: Pipeline,
    pub k: usize,
    pub seed: u64,
    pub group_by_subject: bool,
    pub inductive: bool,
    pub n_samples: usize,
    /// Test-fold accuracy per fold, in fold order.
    pub cv_scores: Vec<f64>,
    pub mean_cv_accuracy: f64,
    /// Summed over all test folds.
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
}

impl EvalReport {
    pub fn from_predictions(cfg: &CvConfig, cv_scores: Vec<f64>, y_true: &[usize], y_pred: &[usize]) -> Result<Self> {
        let confusion = confusion(y_true, y_pred)?;
        Ok(Self {
            pipeline: cfg.pipeline,
            k: cfg.k,
            seed: cfg.seed,
            group_by_subject: cfg.group_by_subject,
            inductive: cfg.inductive,
            n_samples: y_true.len(),
            mean_cv_accuracy: cv_scores.iter().sum::<f64>() / cv_scores.len().max(1) as f64,
            cv_scores,
            metrics: metrics(&confusion)?,
            confusion,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn select_rows(x: ArrayView2<f64>, mask: &[bool]) -> Array2<f64> {
    let idx: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
    x.select(Axis(0), &idx)
}

fn select<T: Clone>(v: &[T], mask: &[bool]) -> Vec<T> {
    v.iter().zip(mask).filter(|(_, &m)| m).map(|(x, _)| x.clone()).collect()
}

fn feature_names(d: usize) -> Vec<String> {
    if d == MODEL_FEATURES.len() {
        MODEL_FEATURES.iter().map(|s| s.to_string()).collect()
    } else {
        (0..d).map(|i| format!("feature {i}")).collect()
    }
}

fn standardize(x: ArrayView2<f64>, fit_mask: Option<&[bool]>) -> Result<Array2<f64>> {
    let names = feature_names(x.ncols());
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    let s = match fit_mask {
        Some(m) => Standardizer::fit(select_rows(x, m).view(), &names)?,
        None => Standardizer::fit(x, &names)?,
    };
    s.apply(x)
}

/// Graph operator over the rows of `x`.
pub fn knn_operator(x: ArrayView2<f64>, k: usize) -> Result<PropagationOperator> {
    let edges = knn_graph(x, k)?;
    Ok(normalize_adjacency(x.nrows(), &edges))
}

struct Shared {
    xs: Option<Array2<f64>>,
    a: Option<PropagationOperator>,
}

/// Predictions for the test nodes of one fold, in index order.
fn run_fold(
    x: ArrayView2<f64>,
    labels: &[usize],
    shared: &Shared,
    test: &[bool],
    cfg: &CvConfig,
    fold: usize,
) -> Result<Vec<usize>> {
    let train: Vec<bool> = test.iter().map(|t| !t).collect();
    let train_labels = select(labels, &train);
    if !train_labels.contains(&0) || !train_labels.contains(&1) {
        return Err(Error::DegenerateLabels);
    }
    let local;
    let xs = match &shared.xs {
        Some(xs) => xs.view(),
        None => {
            local = standardize(x, Some(&train))?;
            local.view()
        }
    };
    let svm_fit_predict = |feats: ArrayView2<f64>| -> Result<Vec<usize>> {
        let model = train_svm(
            select_rows(feats, &train).view(),
            &targets_from_classes(&train_labels),
            &cfg.svm,
        )?;
        Ok(classes_from_targets(&model.predict(select_rows(feats, test).view())?))
    };
    if cfg.pipeline == Pipeline::Svm {
        return svm_fit_predict(xs);
    }

    let train_cfg = TrainConfig {
        seed: cfg.fold_seed(fold),
        ..cfg.train.clone()
    };
    let (params, a_eval) = match &shared.a {
        Some(a) => (gcn::train_on(xs, labels, &train, a, &train_cfg)?.params, None),
        None => {
            let x_train = select_rows(xs, &train);
            let a_train = knn_operator(x_train.view(), cfg.graph_k)?;
            let all = vec![true; x_train.nrows()];
            let params = gcn::train_on(x_train.view(), &train_labels, &all, &a_train, &train_cfg)?.params;
            (params, Some(knn_operator(xs, cfg.graph_k)?))
        }
    };
    let a = a_eval.as_ref().or(shared.a.as_ref()).expect("operator present");
    match cfg.pipeline {
        Pipeline::Gcn => Ok(select(&gcn::predict(a, xs, &params)?, test)),
        _ => svm_fit_predict(gcn::embed(a, xs, &params)?.view()),
    }
}

/// Runs k-fold cross-validation of one pipeline on raw (unstandardized)
/// features. By default features are standardized over all rows and a
/// single transductive KNN graph is built before splitting.
pub fn cross_validate(data: &ModelData, cfg: &CvConfig) -> Result<EvalReport> {
    let x = data.x.view();
    let labels = &data.labels;
    if labels.len() != x.nrows() {
        return Err(Error::Dimension(format!(
            "{} rows but {} labels",
            x.nrows(),
            labels.len()
        )));
    }
    cfg.train.validate()?;
    let plan = if cfg.group_by_subject {
        subject_kfold(labels, &data.subjects, cfg.k, cfg.seed)?
    } else {
        stratified_kfold(labels, cfg.k, cfg.seed)?
    };
    let shared = if cfg.inductive {
        Shared { xs: None, a: None }
    } else {
        let xs = standardize(x, None)?;
        let a = match cfg.pipeline {
            Pipeline::Svm => None,
            _ => Some(knn_operator(xs.view(), cfg.graph_k)?),
        };
        Shared { xs: Some(xs), a }
    };

    let masks: Vec<Vec<bool>> = (0..cfg.k).map(|f| plan.test_mask(f)).collect();
    let run = |f: usize| run_fold(x, labels, &shared, &masks[f], cfg, f);
    #[cfg(feature = "parallel")]
    let fold_preds: Vec<Vec<usize>> = {
        use rayon::prelude::*;
        (0..cfg.k).into_par_iter().map(run).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let fold_preds: Vec<Vec<usize>> = (0..cfg.k).map(run).collect::<Result<_>>()?;

    let mut y_pred = vec![usize::MAX; labels.len()];
    let mut cv_scores = Vec::with_capacity(cfg.k);
    for (mask, preds) in masks.iter().zip(&fold_preds) {
        let idx: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
        let mut hits = 0;
        for (&i, &p) in idx.iter().zip(preds) {
            y_pred[i] = p;
            hits += usize::from(labels[i] == p);
        }
        cv_scores.push(hits as f64 / idx.len().max(1) as f64);
    }
    EvalReport::from_predictions(cfg, cv_scores, labels, &y_pred)
}

fn two(v: f64) -> String {
    format!("{v:.2}")
}

/// `text` mirrors the published table rows at two decimals; `json` keeps
/// full precision.
pub fn render_report(r: &EvalReport, format: &str) -> Result<String> {
    match format {
        "json" => Ok(serde_json::to_string_pretty(r)? + "\n"),
        "text" => {
            let split = if r.group_by_subject {
                "Folds hold out whole subjects"
            } else {
                "Folds are stratified by window; one subject's windows may appear in both training and test folds"
            };
            let graph = match (r.pipeline, r.inductive) {
                (Pipeline::Svm, _) => "no graph",
                (_, false) => "transductive graph over all windows",
                (_, true) => "training graph rebuilt per fold",
            };
            let [[a, b], [c, d]] = r.confusion.counts;
            let m = &r.metrics;
            let mut out = String::new();
            out.push_str(&format!("Pipeline {}\n", r.pipeline));
            out.push_str(&format!(
                "Protocol {}-fold cross-validation, seed {}, {graph}\n",
                r.k, r.seed
            ));
            out.push_str(&format!("Note {split}\n"));
            out.push_str(&format!("Samples {}\n", r.n_samples));
            let scores: Vec<String> = r.cv_scores.iter().map(|&s| two(s)).collect();
            out.push_str(&format!("CV Scores {}\n", scores.join(" ")));
            out.push_str(&format!("Mean CV Accuracy {}\n", two(r.mean_cv_accuracy)));
            out.push_str(&format!("Confusion Matrix [[{a}, {b}], [{c}, {d}]]\n"));
            out.push_str(&format!("F1-Score (Healthy) {}\n", two(m.healthy.f1)));
            out.push_str(&format!("F1-Score (PD) {}\n", two(m.pd.f1)));
            out.push_str(&format!("Accuracy {}\n", two(m.accuracy)));
            out.push_str(&format!("Macro Avg F1 {}\n", two(m.macro_f1)));
            out.push_str(&format!("Weighted Avg Precision {}\n", two(m.weighted_precision)));
            Ok(out)
        }
        other => Err(Error::UnknownFormat(other.to_string())),
    }
}

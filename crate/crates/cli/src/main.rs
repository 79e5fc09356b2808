//! `semgcn`: synthesize cohorts, extract window features, inspect the KNN
//! feature graph, train and cross-validate the classifiers, and plot
//! recordings.
//!
//! Exit status: 0 on success, 1 on a runtime failure (one-line diagnostic on
//! stderr), 2 on a usage error. Set `SEMGCN_LOG=info` (or `debug`) for
//! progress logging.

mod config;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use semgcn::checkpoint::fit;
use semgcn::dataset::{extract_table, FeatureTable, ModelData, WindowingConfig};
use semgcn::eval::{cross_validate, render_report, CvConfig, EvalReport, Pipeline};
use semgcn::features::{median_frequency, power_spectrum, FeatureConfig, Standardizer, MODEL_FEATURES};
use semgcn::graph::{graph_stats, knn_graph, write_edge_list};
use semgcn::signal_io::{load_dataset, segment, Hand, ProtocolTiming, Recording, SegmentId};
use semgcn::synth::{generate_cohort, CohortSpec};
use serde_json::{json, Value};

use config::{header_line, Settings};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<semgcn::Error> for CliError {
    fn from(e: semgcn::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

type CliResult<T = ()> = Result<T, CliError>;

#[derive(Parser)]
#[command(name = "semgcn", version, about = "sEMG feature graphs and GCN / SVM classification")]
struct Cli {
    /// Read settings from a `key = value` file. Command-line flags take
    /// precedence over the file, which takes precedence over defaults.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic cohort tree with a manifest.
    Synth(SynthArgs),
    /// Window recordings and write the feature CSV.
    Extract(ExtractArgs),
    /// Build the KNN feature graph and print its statistics.
    GraphStats(GraphArgs),
    /// Fit a pipeline on all samples and write a checkpoint.
    Train(TrainArgs),
    /// Cross-validate a pipeline and write text and JSON reports.
    Evaluate(EvaluateArgs),
    /// Re-render a saved JSON report.
    Report(ReportArgs),
    /// Write SVG figures of recordings and their spectra.
    Plot(PlotArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory [required]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Cohort seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Number of PD subjects [default: 5]
    #[arg(long)]
    n_pd: Option<usize>,
    /// Number of healthy subjects [default: 5]
    #[arg(long)]
    n_healthy: Option<usize>,
    /// Sampling rate in Hz [default: 1000]
    #[arg(long)]
    fs: Option<f64>,
}

#[derive(Args)]
struct WindowArgs {
    /// Window length in seconds [default: 1]
    #[arg(long)]
    window_s: Option<f64>,
    /// Window overlap fraction in [0, 1) [default: 0.5]
    #[arg(long)]
    overlap: Option<f64>,
}

#[derive(Args)]
struct InputArgs {
    /// Dataset root containing {pd,healthy}/{left,right}/*.csv
    #[arg(long, conflicts_with = "features")]
    data: Option<PathBuf>,
    /// Feature CSV written by `extract`
    #[arg(long)]
    features: Option<PathBuf>,
    #[command(flatten)]
    window: WindowArgs,
}

#[derive(Args)]
struct ModelArgs {
    /// svm, gcn or gcn-svm [default: gcn-svm]
    #[arg(long)]
    pipeline: Option<Pipeline>,
    /// Seed for fold assignment and weight initialization [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Neighbors per node in the KNN graph [default: 10]
    #[arg(long)]
    graph_k: Option<usize>,
    /// GCN training epochs [default: 50]
    #[arg(long)]
    epochs: Option<usize>,
    /// GCN hidden width [default: 16]
    #[arg(long)]
    hidden: Option<usize>,
    /// GCN dropout probability [default: 0.5]
    #[arg(long)]
    dropout: Option<f64>,
    /// Adam learning rate [default: 0.01]
    #[arg(long)]
    lr: Option<f64>,
    /// SVM box constraint C [default: 1]
    #[arg(long)]
    svm_c: Option<f64>,
}

#[derive(Args)]
struct ExtractArgs {
    /// Dataset root [required]
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output feature CSV [required]
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    window: WindowArgs,
    /// Skip REC, DET, SampEn and CD (quadratic in window length)
    #[arg(long)]
    linear_only: bool,
}

#[derive(Args)]
struct GraphArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Neighbors per node [default: 10]
    #[arg(long)]
    graph_k: Option<usize>,
    /// Also write the statistics as JSON
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the edge list
    #[arg(long)]
    edges: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Output checkpoint JSON [required]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Number of folds [default: 5]
    #[arg(long)]
    folds: Option<usize>,
    /// Keep all windows of a subject in one fold
    #[arg(long)]
    group_by_subject: bool,
    /// Standardize and build the training graph from training nodes only
    #[arg(long)]
    inductive: bool,
    /// Output directory for report.json and report.txt [required]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// JSON report written by `evaluate` [required]
    #[arg(long)]
    input: Option<PathBuf>,
    /// text or json
    #[arg(long, default_value = "text", value_parser = ["text", "json"])]
    format: String,
}

#[derive(Args)]
struct PlotArgs {
    /// Dataset root [required]
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output directory [required]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Only plot this subject id
    #[arg(long)]
    subject: Option<String>,
    /// Only plot this hand (left or right)
    #[arg(long)]
    hand: Option<Hand>,
    /// Segment whose spectrum is plotted [default: S3]
    #[arg(long)]
    segment: Option<SegmentId>,
    /// Upper frequency of the spectrum plot in Hz [default: 250]
    #[arg(long)]
    max_hz: Option<f64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SEMGCN_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("semgcn: usage error: {}", one_line(&msg));
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("semgcn: error: {}", one_line(&format!("{e:#}")));
            ExitCode::from(1)
        }
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn run(cli: Cli) -> CliResult {
    let mut s = Settings::load(cli.config.as_deref())?;
    match cli.command {
        Command::Synth(a) => synth(&mut s, a),
        Command::Extract(a) => extract(&mut s, a),
        Command::GraphStats(a) => graph(&mut s, a),
        Command::Train(a) => train(&mut s, a),
        Command::Evaluate(a) => evaluate(&mut s, a),
        Command::Report(a) => report(&mut s, a),
        Command::Plot(a) => plot(&mut s, a),
    }
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> CliResult {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values serialize") + "\n"
}

fn load_recordings(root: &Path) -> CliResult<Vec<Recording>> {
    let recs = load_dataset(root).with_context(|| format!("loading {}", root.display()))?;
    if recs.is_empty() {
        return Err(anyhow::anyhow!("no recordings under {}", root.display()).into());
    }
    info!("loaded {} recordings from {}", recs.len(), root.display());
    Ok(recs)
}

fn windowing(s: &mut Settings, a: &WindowArgs) -> CliResult<WindowingConfig> {
    let d = WindowingConfig::default();
    let window_s = s.value("window_s", a.window_s, d.window_s)?;
    let overlap = s.value("overlap", a.overlap, d.overlap)?;
    if window_s.is_nan() || window_s <= 0.0 || !(0.0..1.0).contains(&overlap) {
        return Err(CliError::Usage(format!(
            "window_s must be > 0 and overlap in [0, 1) (got {window_s}, {overlap})"
        )));
    }
    Ok(WindowingConfig { window_s, overlap, ..d })
}

enum Source {
    Tree(PathBuf, WindowingConfig),
    Csv(PathBuf),
}

/// Resolves `--data` or `--features`. A flag for one source hides the other
/// source's config-file entry.
fn source(s: &mut Settings, a: &InputArgs) -> CliResult<Source> {
    let data = if a.features.is_none() {
        s.optional_path("data", a.data.clone())?
    } else {
        None
    };
    let features = if data.is_none() {
        s.optional_path("features", a.features.clone())?
    } else {
        None
    };
    match (data, features) {
        (Some(root), None) => Ok(Source::Tree(root, windowing(s, &a.window)?)),
        (None, Some(path)) => Ok(Source::Csv(path)),
        _ => Err(CliError::Usage("give exactly one of --data or --features".into())),
    }
}

/// Model features from a dataset tree (extracted on the fly, linear
/// features only) or from a feature CSV.
fn model_data(src: &Source) -> CliResult<ModelData> {
    let table = match src {
        Source::Tree(root, w) => {
            let fcfg = FeatureConfig {
                nonlinear: false,
                ..Default::default()
            };
            extract_table(&load_recordings(root)?, w, &fcfg)?
        }
        Source::Csv(path) => {
            let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
            FeatureTable::read_csv(&bytes).with_context(|| format!("reading {}", path.display()))?
        }
    };
    let md = table.model_data()?;
    if md.dropped > 0 {
        warn!("dropped {} rows with unavailable model features", md.dropped);
    }
    info!("{} samples, {} features", md.labels.len(), md.x.ncols());
    Ok(md)
}

fn cv_config(s: &mut Settings, m: &ModelArgs) -> CliResult<CvConfig> {
    let mut c = CvConfig::default();
    c.pipeline = s.value("pipeline", m.pipeline, c.pipeline)?;
    c.seed = s.value("seed", m.seed, c.seed)?;
    c.graph_k = s.value("graph_k", m.graph_k, c.graph_k)?;
    c.train.epochs = s.value("epochs", m.epochs, c.train.epochs)?;
    c.train.hidden = s.value("hidden", m.hidden, c.train.hidden)?;
    c.train.dropout_p = s.value("dropout", m.dropout, c.train.dropout_p)?;
    c.train.adam.lr = s.value("lr", m.lr, c.train.adam.lr)?;
    c.svm.c = s.value("svm_c", m.svm_c, c.svm.c)?;
    Ok(c)
}

fn synth(s: &mut Settings, a: SynthArgs) -> CliResult {
    let out = s.path("out", a.out)?;
    let d = CohortSpec::default();
    let spec = CohortSpec {
        seed: s.value("seed", a.seed, d.seed)?,
        n_pd: s.value("n_pd", a.n_pd, d.n_pd)?,
        n_healthy: s.value("n_healthy", a.n_healthy, d.n_healthy)?,
        fs: s.value("fs", a.fs, d.fs)?,
        ..d
    };
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let manifest = generate_cohort(&spec, &out, s.provenance("synth"))?;
    println!("wrote {} recordings to {}", manifest.entries.len(), out.display());
    Ok(())
}

fn extract(s: &mut Settings, a: ExtractArgs) -> CliResult {
    let data = s.path("data", a.data)?;
    let out = s.path("out", a.out)?;
    let w = windowing(s, &a.window)?;
    let linear_only = s.switch("linear_only", a.linear_only)?;
    let recs = load_recordings(&data)?;
    let fcfg = FeatureConfig {
        nonlinear: !linear_only,
        ..Default::default()
    };
    let table = extract_table(&recs, &w, &fcfg)?;
    let mut buf = Vec::new();
    table.write_csv(&mut buf, &[header_line(&s.provenance("extract"))])?;
    write_file(&out, buf)?;
    println!("wrote {} feature rows to {}", table.rows.len(), out.display());
    Ok(())
}

fn graph(s: &mut Settings, a: GraphArgs) -> CliResult {
    let src = source(s, &a.input)?;
    let k = s.value("graph_k", a.graph_k, CvConfig::default().graph_k)?;
    let out = s.optional_path("out", a.out)?;
    let edges_path = s.optional_path("edges", a.edges)?;
    let md = model_data(&src)?;
    let (_, xs) = Standardizer::fit_apply(md.x.view(), &MODEL_FEATURES)?;
    let edges = knn_graph(xs.view(), k)?;
    let stats = graph_stats(md.labels.len(), &edges)?;
    println!("Nodes {}", stats.nodes);
    println!("Edges {}", stats.edges);
    println!("Average Degree {:.4}", stats.average_degree);
    println!("Average Degree Centrality {:.4}", stats.average_degree_centrality);
    println!(
        "Average Clustering Coefficient {:.4}",
        stats.average_clustering_coefficient
    );
    let provenance = s.provenance("graph-stats");
    if let Some(path) = out {
        write_file(&path, pretty(&json!({ "provenance": provenance, "stats": stats })))?;
    }
    if let Some(path) = edges_path {
        let mut buf = format!("# {}\n", header_line(&provenance)).into_bytes();
        write_edge_list(&mut buf, md.labels.len(), k, &edges).context("writing edge list")?;
        write_file(&path, buf)?;
    }
    Ok(())
}

fn train(s: &mut Settings, a: TrainArgs) -> CliResult {
    let src = source(s, &a.input)?;
    let cfg = cv_config(s, &a.model)?;
    let out = s.path("out", a.out)?;
    let md = model_data(&src)?;
    let mut ck = fit(&md, &cfg)?;
    ck.provenance = s.provenance("train");
    let predicted = ck.predict(md.x.view())?;
    let correct = predicted.iter().zip(&md.labels).filter(|(p, l)| p == l).count();
    write_file(&out, ck.to_json()?)?;
    println!(
        "trained {} on {} samples (training accuracy {:.4}); wrote {}",
        cfg.pipeline,
        md.labels.len(),
        correct as f64 / md.labels.len() as f64,
        out.display()
    );
    Ok(())
}

fn evaluate(s: &mut Settings, a: EvaluateArgs) -> CliResult {
    let src = source(s, &a.input)?;
    let mut cfg = cv_config(s, &a.model)?;
    cfg.k = s.value("folds", a.folds, cfg.k)?;
    cfg.group_by_subject = s.switch("group_by_subject", a.group_by_subject)?;
    cfg.inductive = s.switch("inductive", a.inductive)?;
    let out = s.path("out", a.out)?;
    let md = model_data(&src)?;
    let report = cross_validate(&md, &cfg)?;
    let provenance = s.provenance("evaluate");
    let text = render_report(&report, "text")?;
    write_file(
        &out.join("report.json"),
        pretty(&json!({ "provenance": provenance, "report": report })),
    )?;
    write_file(
        &out.join("report.txt"),
        format!("# {}\n{text}", header_line(&provenance)),
    )?;
    print!("{text}");
    Ok(())
}

fn report(s: &mut Settings, a: ReportArgs) -> CliResult {
    let input = s.path("input", a.input)?;
    let text = std::fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", input.display()))?;
    // Accept both the wrapped `evaluate` output and a bare report.
    let inner = value.get("report").cloned().unwrap_or(value);
    let r: EvalReport = serde_json::from_value(inner).with_context(|| format!("reading report {}", input.display()))?;
    print!("{}", render_report(&r, &a.format)?);
    Ok(())
}

fn plot(s: &mut Settings, a: PlotArgs) -> CliResult {
    let data = s.path("data", a.data)?;
    let out = s.path("out", a.out)?;
    let subject = s.optional("subject", a.subject)?;
    let hand = s.optional("hand", a.hand)?;
    let seg_id = s.value("segment", a.segment, SegmentId::S3HoldContraction)?;
    let max_hz = s.value("max_hz", a.max_hz, 250.0)?;
    let header = header_line(&s.provenance("plot"));
    let mut written = 0;
    for r in load_recordings(&data)? {
        if subject.as_ref().is_some_and(|id| *id != r.subject_id) || hand.is_some_and(|h| h != r.hand) {
            continue;
        }
        let stem = format!("{}_{}_{}", r.group.dir_name(), r.subject_id, r.hand);
        let segments = match segment(&r, &ProtocolTiming::default()) {
            Ok(seg) => Some(seg),
            Err(e) => {
                warn!("{stem}: no segment shading ({e})");
                None
            }
        };
        write_file(
            &out.join(format!("{stem}_signal.svg")),
            svg::signal_svg(&r, segments.as_ref(), &header),
        )?;
        let (values, label) = match segments.as_ref().and_then(|seg| seg.get(&seg_id)) {
            Some(range) => (&r.values[range.clone()], seg_id.to_string()),
            None => (&r.values[..], "full recording".to_string()),
        };
        let spectrum = power_spectrum(values, r.sampling_rate_hz).with_context(|| format!("{stem} spectrum"))?;
        let mdf = median_frequency(&spectrum).ok();
        let title = format!("{} {} {}: power spectrum, {label}", r.subject_id, r.group, r.hand);
        let figure = svg::spectrum_svg(&title, &spectrum, mdf.map(|m| ("MDF", m)), max_hz, &header);
        write_file(&out.join(format!("{stem}_{seg_id}_spectrum.svg")), figure)?;
        written += 2;
    }
    if written == 0 {
        return Err(anyhow::anyhow!("no recordings match the subject/hand filter").into());
    }
    println!("wrote {written} figures to {}", out.display());
    Ok(())
}

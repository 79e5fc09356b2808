//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_SHORTFALLS` are reported as FAIL but do not
//! change the exit status; any other failure exits with status 1.

mod common;

use std::time::{Duration, Instant};

use common::*;
use ndarray::array;
use rand::seq::SliceRandom;
use semgcn::dataset::{extract_table, WindowingConfig};
use semgcn::eval::{cross_validate, metrics, render_report, stratified_kfold, ConfusionMatrix, CvConfig, Pipeline};
use semgcn::features::{power_spectrum, recurrence_matrix, rqa_measures, sample_entropy, FeatureConfig};
use semgcn::gcn::GcnParams;
use semgcn::graph::{graph_stats, knn_graph, normalize_adjacency};
use semgcn::signal_io::load_dataset;
use semgcn::synth::{generate_cohort, generate_recordings, CohortSpec};

const KNOWN_SHORTFALLS: [(u8, &str); 2] = [
    (
        1,
        "the published F1 (PD) of 0.91 does not follow from the published matrix",
    ),
    (
        6,
        "the synthetic cohort does not give gcn-svm a 0.03 margin on every seed",
    ),
];

type Criterion = (u8, &'static str, Box<dyn FnOnce() -> Check>);

struct Check {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Check {
    Check {
        pass,
        detail: detail.into(),
    }
}

fn timed(limit: Duration, f: impl FnOnce() -> Check) -> Check {
    let start = Instant::now();
    let mut c = f();
    let elapsed = start.elapsed();
    if elapsed > limit {
        c.pass = false;
    }
    c.detail = format!(
        "{}; {:.3} s (limit {} s)",
        c.detail,
        elapsed.as_secs_f64(),
        limit.as_secs_f64()
    );
    c
}

fn published_metrics() -> Check {
    let cm = ConfusionMatrix {
        counts: [[4003, 346], [302, 3578]],
    };
    let start = Instant::now();
    let m = metrics(&cm).unwrap();
    let elapsed = start.elapsed();
    let got = [two(m.accuracy), two(m.healthy.f1), two(m.pd.f1)];
    let want = ["0.92", "0.93", "0.91"];
    let ok = got.iter().zip(want).all(|(g, w)| g == w) && elapsed < Duration::from_millis(1);
    check(
        ok,
        format!(
            "accuracy {} / F1 healthy {} / F1 PD {} (F1 PD = {:.5}), expected {}; {} us",
            got[0],
            got[1],
            got[2],
            m.pd.f1,
            want.join(" / "),
            elapsed.as_micros()
        ),
    )
}

fn table_accuracies() -> Check {
    let cases: [([[u64; 2]; 2], &str); 3] = [
        ([[3519, 830], [1005, 2877]], "0.78"),
        ([[1863, 282], [410, 1553]], "0.83"),
        ([[1755, 422], [379, 1567]], "0.81"),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (counts, want) in cases {
        let got = two(metrics(&ConfusionMatrix { counts }).unwrap().accuracy);
        ok &= got == want;
        parts.push(format!("{got} (expected {want})"));
    }
    let m = metrics(&ConfusionMatrix { counts: cases[0].0 }).unwrap();
    let f1 = (two(m.healthy.f1), two(m.pd.f1));
    ok &= f1 == ("0.79".into(), "0.76".into());
    check(
        ok,
        format!("accuracies {}; complete-set F1 {} / {}", parts.join(", "), f1.0, f1.1),
    )
}

fn gradient_check_suite() -> Check {
    let mut worst: f64 = 0.0;
    let mut graphs = 0;
    for seed in 0..40u64 {
        let n = 2 + seed as usize % 9;
        let d = [1, 3, 9][seed as usize % 3];
        let h = [4, 16][seed as usize % 2];
        let edges = random_edges(seed, n, 0.2 + 0.1 * (seed % 5) as f64);
        let a = normalize_adjacency(n, &edges);
        let x = random_matrix(seed + 1000, n, d);
        let params = if seed % 2 == 0 {
            random_params(seed, d, h, 2)
        } else {
            GcnParams::init(d, h, 2, seed).unwrap()
        };
        let labels: Vec<usize> = (0..n).map(|i| (i * 7 + seed as usize) % 2).collect();
        let mask: Vec<bool> = (0..n).map(|i| seed % 3 != 0 || i % 2 == 0).collect();
        worst = worst.max(gradient_check(&a, &x, &params, &labels, &mask, 1e-5));
        graphs += 1;
    }
    check(
        worst <= 1e-4,
        format!("{graphs} graphs with n <= 10, max relative error {worst:.2e} (tolerance 1e-4)"),
    )
}

fn feature_oracles() -> Check {
    let mut dft_worst: f64 = 0.0;
    for (seed, n) in [
        (1, 16),
        (2, 100),
        (3, 255),
        (4, 256),
        (5, 500),
        (6, 777),
        (7, 1000),
        (8, 1024),
    ] {
        let x = gaussian(seed, n);
        let s = power_spectrum(&x, 1000.0).unwrap();
        let total: f64 = s.power.iter().sum();
        for (p, q) in s.power.iter().zip(naive_dft_power(&x)) {
            dft_worst = dft_worst.max((p - q).abs() / q.max(1e-6 * total));
        }
    }
    let mut exact = true;
    for seed in 0..4u64 {
        let x = uniform(seed, 500);
        let r = 0.2 * population_sd(&x);
        let s = sample_entropy(&x, 2, r).unwrap();
        exact &= (s.a, s.b) == brute_sampen_counts(&x, 2, r) && s.value == brute_sampen(&x, 2, r);
        let g = gaussian(seed + 10, 500);
        let eps = 0.4 * population_sd(&g);
        let rm = recurrence_matrix(&g, 3, 1, eps).unwrap();
        let oracle = brute_recurrence(&g, 3, 1, eps);
        exact &= (0..rm.size()).all(|i| (0..rm.size()).all(|j| rm.get(i, j) == oracle[i][j]));
        let q = rqa_measures(&rm, 2).unwrap();
        exact &= (q.rec, q.det) == brute_rqa(&oracle, 2);
    }
    let mut parseval_worst: f64 = 0.0;
    for seed in 0..100u64 {
        let x = gaussian(seed + 500, 16 + (seed as usize * 97) % 1009);
        let var = population_sd(&x).powi(2);
        parseval_worst = parseval_worst.max((power_spectrum(&x, 1000.0).unwrap().total_power() - var).abs() / var);
    }
    check(
        dft_worst <= 1e-9 && exact && parseval_worst <= 1e-6,
        format!(
            "DFT max relative error {dft_worst:.1e} (1e-9, bins below 1e-6 of total compared at that floor); \
             SampEn/recurrence/RQA exact: {exact}; Parseval max relative error {parseval_worst:.1e} (1e-6, 100 signals)"
        ),
    )
}

fn graph_suite() -> Check {
    let mut clustering_ok = true;
    for seed in 0..50u64 {
        let n = 2 + (seed as usize * 13) % 49;
        let edges = random_edges(seed, n, [0.1, 0.3, 0.6, 0.95][seed as usize % 4]);
        let s = graph_stats(n, &edges).unwrap();
        clustering_ok &= (s.average_clustering_coefficient - brute_clustering(n, &edges)).abs() <= 1e-12;
    }
    let mut asym: f64 = 0.0;
    for seed in 0..10u64 {
        let x = random_matrix(seed, 50, 9);
        let a = normalize_adjacency(50, &knn_graph(x.view(), 10).unwrap()).to_dense();
        asym = asym.max((&a - &a.t()).iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    let collinear = knn_graph(array![[0.0], [1.0], [3.0]].view(), 1).unwrap() == vec![(0, 1), (1, 2)];
    check(
        clustering_ok && asym <= 1e-12 && collinear,
        format!("clustering matches triangle count on 50 graphs: {clustering_ok}; max |A - A^T| {asym:.1e}; collinear example exact: {collinear}"),
    )
}

fn cv_accuracy(seed: u64, pipeline: Pipeline) -> f64 {
    let recs = generate_recordings(&CohortSpec {
        seed,
        ..Default::default()
    })
    .unwrap();
    let fcfg = FeatureConfig {
        nonlinear: false,
        ..Default::default()
    };
    let data = extract_table(&recs, &WindowingConfig::default(), &fcfg)
        .unwrap()
        .model_data()
        .unwrap();
    cross_validate(
        &data,
        &CvConfig {
            pipeline,
            seed,
            ..Default::default()
        },
    )
    .unwrap()
    .mean_cv_accuracy
}

fn ordering_claim() -> Check {
    let mut met = 0;
    let mut parts = Vec::new();
    for seed in [1u64, 2, 3] {
        let svm = cv_accuracy(seed, Pipeline::Svm);
        let hybrid = cv_accuracy(seed, Pipeline::GcnSvm);
        let ok = hybrid - svm >= 0.03 && hybrid >= 0.85;
        met += usize::from(ok);
        parts.push(format!(
            "seed {seed}: svm {svm:.3} gcn-svm {hybrid:.3} margin {:+.3}",
            hybrid - svm
        ));
    }
    check(
        met == 3,
        format!(
            "{met}/3 seeds meet margin >= 0.03 and gcn-svm >= 0.85 ({})",
            parts.join("; ")
        ),
    )
}

fn evaluate_json(root: &std::path::Path) -> String {
    let recs = load_dataset(root).unwrap();
    let fcfg = FeatureConfig {
        nonlinear: false,
        ..Default::default()
    };
    let data = extract_table(&recs, &WindowingConfig::default(), &fcfg)
        .unwrap()
        .model_data()
        .unwrap();
    let report = cross_validate(
        &data,
        &CvConfig {
            seed: 7,
            ..Default::default()
        },
    )
    .unwrap();
    render_report(&report, "json").unwrap()
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().unwrap();
    generate_cohort(
        &CohortSpec {
            seed: 7,
            ..Default::default()
        },
        dir.path(),
        serde_json::json!({"seed": 7}),
    )
    .unwrap();
    let a = evaluate_json(dir.path());
    let b = evaluate_json(dir.path());
    check(
        a == b,
        format!(
            "two gcn-svm evaluations, {} JSON bytes each, identical: {}",
            a.len(),
            a == b
        ),
    )
}

fn stratification() -> Check {
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let n = 40 + (seed as usize * 71) % 900;
        let ones = 5 + (n - 10) * (seed as usize + 1) / 22;
        let mut labels: Vec<usize> = (0..n).map(|i| usize::from(i < ones)).collect();
        labels.shuffle(&mut rng(seed));
        let plan = stratified_kfold(&labels, 5, seed).unwrap();
        for c in 0..2 {
            let n_c = labels.iter().filter(|&&l| l == c).count() as f64;
            for f in 0..5 {
                let got = (0..n).filter(|&i| labels[i] == c && plan.assignments[i] == f).count() as f64;
                worst = worst.max((got - n_c / 5.0).abs());
            }
        }
    }
    check(
        worst <= 1.0,
        format!("20 label vectors, max per-fold class deviation {worst:.2} (tolerance 1)"),
    )
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        (1, "metrics vs published summary table", Box::new(published_metrics)),
        (2, "metrics vs published baseline tables", Box::new(table_accuracies)),
        (
            3,
            "GCN gradient check",
            Box::new(|| timed(Duration::from_secs(10), gradient_check_suite)),
        ),
        (
            4,
            "feature oracles",
            Box::new(|| timed(Duration::from_secs(30), feature_oracles)),
        ),
        (
            5,
            "graph suite",
            Box::new(|| timed(Duration::from_secs(5), graph_suite)),
        ),
        (
            6,
            "gcn-svm beats svm on synthetic cohorts",
            Box::new(|| timed(Duration::from_secs(120), ordering_claim)),
        ),
        (7, "byte-identical evaluation reports", Box::new(determinism)),
        (8, "stratified folds", Box::new(stratification)),
    ];
    let mut unexpected = 0;
    for (id, name, run) in criteria {
        let c = run();
        let known = KNOWN_SHORTFALLS.iter().find(|(k, _)| *k == id);
        let status = if c.pass { "PASS" } else { "FAIL" };
        println!("criterion {id}: {status} {name}: {}", c.detail);
        match (c.pass, known) {
            (false, Some((_, why))) => println!("    known shortfall: {why}"),
            (false, None) => unexpected += 1,
            _ => {}
        }
    }
    if unexpected > 0 {
        println!("{unexpected} unexpected failure(s)");
        std::process::exit(1);
    }
}

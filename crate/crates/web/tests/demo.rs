use semgcn_web::{metrics_json, recording_json, spectrum_json, SPECTRUM_POINTS, TRACE_COLUMNS};
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn recording_has_trace_segments_and_features() {
    let v = parse(recording_json(3, true, true).unwrap());
    assert_eq!(v["trace"]["t"].as_array().unwrap().len(), TRACE_COLUMNS);
    let segments = v["segments"].as_array().unwrap();
    let ids: Vec<&str> = segments.iter().map(|s| s["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["S1", "S2", "S3", "S4", "S5"]);
    for s in segments {
        assert!(s["start_s"].as_f64().unwrap() < s["end_s"].as_f64().unwrap());
        assert!(s["features"]["rms"].as_f64().unwrap() > 0.0);
        assert!(s["features"]["samp_en"].as_f64().unwrap().is_finite());
    }
    let lo = v["trace"]["lo"].as_array().unwrap();
    let hi = v["trace"]["hi"].as_array().unwrap();
    assert!(lo.iter().zip(hi).all(|(a, b)| a.as_f64() <= b.as_f64()));
    assert_eq!(
        recording_json(3, true, true).unwrap(),
        recording_json(3, true, true).unwrap()
    );
}

#[test]
fn pd_hold_spectrum_peaks_at_the_tremor_line() {
    let v = parse(spectrum_json(0, true, false, 3, 250.0).unwrap());
    assert!((v["peak_hz"].as_f64().unwrap() - 5.0).abs() <= 0.5);
    let freqs = v["freqs"].as_array().unwrap();
    assert_eq!(freqs.len(), SPECTRUM_POINTS);
    assert!(freqs.last().unwrap().as_f64().unwrap() <= 250.0);
    assert!(spectrum_json(0, true, false, 6, 250.0).is_err());
}

#[test]
fn metrics_follow_the_matrix() {
    let v = parse(metrics_json(4003, 346, 302, 3578).unwrap());
    let acc = v["accuracy"].as_f64().unwrap();
    assert!((acc - 7581.0 / 8229.0).abs() < 1e-12);
    let p = 3578.0 / 3924.0;
    let r = 3578.0 / 3880.0;
    assert!((v["pd"]["f1"].as_f64().unwrap() - 2.0 * p * r / (p + r)).abs() < 1e-12);
    assert!(metrics_json(0, 0, 0, 0).is_err());
}

mod common;

use semgcn::features::{power_spectrum, rms, sample_entropy};
use semgcn::signal_io::{recording_windows, segment, validate, Group, Hand, ProtocolTiming, SegmentId};
use semgcn::synth::{generate_recording, generate_recordings, CohortSpec, SignalProfile};

fn s3(r: &semgcn::signal_io::Recording) -> &[f64] {
    let range = segment(r, &ProtocolTiming::default()).unwrap()[&SegmentId::S3HoldContraction].clone();
    &r.values[range]
}

#[test]
fn default_cohorts_pass_validation() {
    for seed in 0..3 {
        for r in generate_recordings(&CohortSpec {
            seed,
            ..Default::default()
        })
        .unwrap()
        {
            let v = validate(&r, 6.0).unwrap();
            assert!(v.passed, "seed {seed} {} {}: {v:?}", r.subject_id, r.hand);
        }
    }
}

#[test]
fn hold_segment_peaks_at_the_tremor_frequency() {
    let spec = CohortSpec::default();
    for id in ["pd01", "pd02", "pd03", "pd04", "pd05"] {
        for hand in [Hand::Left, Hand::Right] {
            let r = generate_recording(id, Group::Pd, hand, &spec).unwrap();
            let peak = power_spectrum(s3(&r), r.sampling_rate_hz)
                .unwrap()
                .peak_frequency()
                .unwrap();
            assert!(
                (peak - spec.pd_profile.tremor_freq).abs() <= 0.5,
                "{id} {hand}: peak {peak}"
            );
        }
    }
}

#[test]
fn contraction_raises_rms() {
    let r = generate_recording("hc01", Group::Healthy, Hand::Left, &CohortSpec::default()).unwrap();
    let seg = segment(&r, &ProtocolTiming::default()).unwrap();
    let s1 = rms(&r.values[seg[&SegmentId::S1Relaxation].clone()]).unwrap();
    assert!(s1 < rms(s3(&r)).unwrap());
}

#[test]
fn pd_windows_have_higher_sample_entropy() {
    // Same subject ids and seed for both groups, so only the profile differs.
    let spec = CohortSpec::default();
    let timing = ProtocolTiming::default();
    let mean_sampen = |group: Group| {
        let mut values = Vec::new();
        for id in ["s01", "s02", "s03"] {
            let r = generate_recording(id, group, Hand::Right, &spec).unwrap();
            for w in recording_windows(&r, &timing, &SegmentId::ANALYZED, 1.0, 0.5)
                .unwrap()
                .iter()
                .step_by(4)
            {
                let sd = common::population_sd(&w.values);
                values.push(sample_entropy(&w.values, 2, 0.2 * sd).unwrap().value);
            }
        }
        values.iter().sum::<f64>() / values.len() as f64
    };
    let (pd, hc) = (mean_sampen(Group::Pd), mean_sampen(Group::Healthy));
    assert!(pd > hc, "PD {pd} vs healthy {hc}");
}

#[test]
fn rms_is_indistinguishable_without_tremor_or_jitter() {
    let pd = SignalProfile {
        tremor_depth: 0.0,
        burst_irregularity: 0.0,
        broadband: 0.0,
        ..SignalProfile::pd()
    };
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for seed in 0..50 {
        let spec = CohortSpec {
            seed,
            pd_profile: pd,
            ..Default::default()
        };
        a.push(rms(&generate_recording("pd01", Group::Pd, Hand::Left, &spec).unwrap().values).unwrap());
        b.push(
            rms(&generate_recording("hc01", Group::Healthy, Hand::Left, &spec)
                .unwrap()
                .values)
            .unwrap(),
        );
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let var = |v: &[f64]| {
        let m = mean(v);
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
    };
    let sem = (var(&a) / 50.0 + var(&b) / 50.0).sqrt();
    assert!((mean(&a) - mean(&b)).abs() < 2.0 * sem);
}

#[test]
fn generation_is_deterministic() {
    let spec = CohortSpec {
        seed: 4,
        ..Default::default()
    };
    assert_eq!(generate_recordings(&spec).unwrap(), generate_recordings(&spec).unwrap());
}

use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use wavemetro::acquisition::{average, iq_jitter_compensate, iq_jitter_estimate};
use wavemetro::synth::seeded_rng;
use wavemetro::{Error, RealWaveform};

const DT: f64 = 5e-12;
const N: usize = 2000;
const F_SIG: f64 = 10e9;
const F_REF: f64 = 1e9;

fn record(f: f64, delay: f64, phase: f64) -> RealWaveform {
    let x = (0..N)
        .map(|k| (2.0 * PI * f * (k as f64 * DT - delay) + phase).cos())
        .collect();
    RealWaveform::new(x, DT, 0.0).unwrap()
}

fn tone(w: &RealWaveform, f: f64) -> Complex64 {
    let s: Complex64 = w
        .samples()
        .iter()
        .enumerate()
        .map(|(k, &v)| Complex64::from_polar(v, -2.0 * PI * f * k as f64 * w.dt()))
        .sum();
    s * (2.0 / w.len() as f64)
}

fn ensemble(jitter: &[f64]) -> (Vec<RealWaveform>, Vec<RealWaveform>) {
    jitter
        .iter()
        .map(|&j| (record(F_SIG, j, 0.3), record(F_REF, j, -1.1)))
        .unzip()
}

fn rms(x: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = x.clone().count() as f64;
    let mean = x.clone().sum::<f64>() / n;
    (x.map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

#[test]
fn picosecond_jitter_removed() {
    let mut rng = seeded_rng(2024);
    let jitter: Vec<f64> = (0..100).map(|_| rng.random_range(-1e-12..1e-12)).collect();
    let (sig, refs) = ensemble(&jitter);
    let est = iq_jitter_estimate(&refs, F_REF).unwrap();
    assert!(est.ambiguous.iter().all(|a| !a));

    let before = rms(jitter.iter().copied());
    let after = rms(jitter.iter().zip(&est.per_record_dt).map(|(j, e)| j - e));
    assert!(after < 10e-15, "residual {after:e}");
    assert!(before / after >= 100.0);

    let clean = tone(&record(F_SIG, 0.0, 0.3), F_SIG).norm();
    let fixed = tone(&iq_jitter_compensate(&sig, &est).unwrap(), F_SIG).norm();
    let raw = tone(&average(&sig).unwrap(), F_SIG).norm();
    assert!((fixed / clean - 1.0).abs() < 1e-3);
    assert!((fixed - clean).abs() <= (raw - clean).abs());
}

#[test]
fn order_independent() {
    let jitter: Vec<f64> = (0..31).map(|i| ((i * 17) % 31) as f64 * 3e-14 - 4e-13).collect();
    let (_, refs) = ensemble(&jitter);
    let est = iq_jitter_estimate(&refs, F_REF).unwrap();
    let mut rev = refs.clone();
    rev.reverse();
    let est_rev = iq_jitter_estimate(&rev, F_REF).unwrap();
    for (a, b) in est.per_record_dt.iter().zip(est_rev.per_record_dt.iter().rev()) {
        assert_eq!(a, b);
    }
}

#[test]
fn weak_reference_reported() {
    let mut rng = seeded_rng(5);
    let mut refs: Vec<RealWaveform> = (0..4).map(|i| record(F_REF, i as f64 * 1e-13, 0.0)).collect();
    let noise = (0..N).map(|_| rng.random_range(-3.0..3.0)).collect();
    refs[2] = RealWaveform::new(noise, DT, 0.0).unwrap();
    match iq_jitter_estimate(&refs, F_REF) {
        Err(Error::WeakReference { record, .. }) => assert_eq!(record, 2),
        other => panic!("expected a weak reference error, got {other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn compensation_never_degrades(seed in any::<u64>(), frac in 0.001f64..0.25, n_rec in 3usize..40) {
        let range = 0.5 / F_REF;
        let sigma = frac * range / 4.0;
        let half = sigma * 3f64.sqrt();
        let mut rng = seeded_rng(seed);
        let jitter: Vec<f64> = (0..n_rec).map(|_| rng.random_range(-half..half)).collect();
        let (sig, refs) = ensemble(&jitter);
        let est = iq_jitter_estimate(&refs, F_REF).unwrap();
        for dt in &est.per_record_dt {
            prop_assert!(dt.abs() <= est.ambiguity_range);
        }
        let clean = tone(&record(F_SIG, 0.0, 0.3), F_SIG).norm();
        let fixed = tone(&iq_jitter_compensate(&sig, &est).unwrap(), F_SIG).norm();
        let raw = tone(&average(&sig).unwrap(), F_SIG).norm();
        prop_assert!((fixed - clean).abs() <= (raw - clean).abs() + 1e-12);
    }
}

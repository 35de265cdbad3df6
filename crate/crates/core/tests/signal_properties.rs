use num_complex::Complex64;
use proptest::prelude::*;
use wavemetro::{forward_transform, fractional_delay, inverse_transform, ComplexWaveform, RealWaveform};

fn real_record(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 1..=max)
}

fn complex_record(max: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| Complex64::new(a, b)), 1..=max)
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parseval_real(x in real_record(4096), dt in 1e-13f64..1e-9) {
        let w = RealWaveform::new(x, dt, 0.0).unwrap();
        let time: f64 = w.samples().iter().map(|v| v * v).sum::<f64>() * dt;
        prop_assert!(rel_close(time, forward_transform(&w).energy(), 1e-10));
    }

    #[test]
    fn parseval_complex(x in complex_record(4096), dt in 1e-13f64..1e-9) {
        let w = ComplexWaveform::new(x, dt, 0.0).unwrap();
        let time: f64 = w.samples().iter().map(|v| v.norm_sqr()).sum::<f64>() * dt;
        prop_assert!(rel_close(time, forward_transform(&w).energy(), 1e-10));
    }

    #[test]
    fn round_trip_real(x in real_record(1024)) {
        let w = RealWaveform::new(x, 1e-12, 3e-12).unwrap();
        let back: RealWaveform = inverse_transform(&forward_transform(&w)).unwrap();
        prop_assert_eq!(back.len(), w.len());
        prop_assert_eq!(back.t0(), w.t0());
        for (a, b) in back.samples().iter().zip(w.samples()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn linearity(pair in (1usize..2048).prop_flat_map(|n| (
            prop::collection::vec(-1.0f64..1.0, n),
            prop::collection::vec(-1.0f64..1.0, n))),
        a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let (x, y) = pair;
        let z: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + b * v).collect();
        let fx = forward_transform(&RealWaveform::new(x, 1.0, 0.0).unwrap());
        let fy = forward_transform(&RealWaveform::new(y, 1.0, 0.0).unwrap());
        let fz = forward_transform(&RealWaveform::new(z, 1.0, 0.0).unwrap());
        let scale = fz.bins().iter().chain(fx.bins()).chain(fy.bins()).map(|c| c.norm()).fold(1e-300, f64::max);
        for k in 0..fz.len() {
            let expect = fx.bins()[k] * a + fy.bins()[k] * b;
            prop_assert!((fz.bins()[k] - expect).norm() <= 1e-12 * scale * 4.0);
        }
    }

    // Odd lengths have no Nyquist bin, so delays compose exactly.
    #[test]
    fn delay_composition_real(half in 4usize..1024, seed in prop::collection::vec(-1.0f64..1.0, 2048),
        a in -0.12f64..0.12, b in -0.12f64..0.12) {
        let n = 2 * half + 1;
        let dt = 1e-12;
        let w = RealWaveform::new(seed[..n].to_vec(), dt, 0.0).unwrap();
        let dur = n as f64 * dt;
        let two = fractional_delay(&fractional_delay(&w, a * dur).unwrap(), b * dur).unwrap();
        let one = fractional_delay(&w, (a + b) * dur).unwrap();
        let peak = one.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (x, y) in two.samples().iter().zip(one.samples()) {
            prop_assert!((x - y).abs() <= 1e-11 * peak);
        }
    }

    #[test]
    fn delay_composition_complex(x in complex_record(2048), a in -0.12f64..0.12, b in -0.12f64..0.12) {
        let w = ComplexWaveform::new(x, 1e-12, 0.0).unwrap();
        let dur = w.duration();
        let two = fractional_delay(&fractional_delay(&w, a * dur).unwrap(), b * dur).unwrap();
        let one = fractional_delay(&w, (a + b) * dur).unwrap();
        let peak = one.samples().iter().fold(0.0f64, |m, v| m.max(v.norm()));
        for (x, y) in two.samples().iter().zip(one.samples()) {
            prop_assert!((x - y).norm() <= 1e-11 * peak);
        }
    }
}

#[test]
fn integer_delay_is_circular_shift() {
    let n = 64;
    let x: Vec<Complex64> = (0..n).map(|k| Complex64::new((k as f64).sin(), (k as f64 * 0.3).cos())).collect();
    let w = ComplexWaveform::new(x.clone(), 1e-12, 0.0).unwrap();
    let d = fractional_delay(&w, 5e-12).unwrap();
    for k in 0..n {
        assert!((d.samples()[(k + 5) % n] - x[k]).norm() < 1e-12);
    }
}

#[test]
fn delay_guard() {
    let w = RealWaveform::new(vec![0.0; 100], 1e-12, 0.0).unwrap();
    assert!(fractional_delay(&w, 25e-12).is_err());
    assert!(fractional_delay(&w, -24.9e-12).is_ok());
    assert!(fractional_delay(&w, f64::NAN).is_err());
}

#[test]
fn spectrum_grid_matches_record() {
    let w = RealWaveform::new(vec![1.0; 10], 0.5, 0.0).unwrap();
    let s = forward_transform(&w);
    assert_eq!(s.len(), 6);
    assert_eq!(s.df(), 0.2);
    assert!((s.dt() - w.dt()).abs() < 1e-15);
    let c = forward_transform(&ComplexWaveform::new(vec![Complex64::new(1.0, 0.0); 10], 0.5, 0.0).unwrap());
    assert_eq!(c.len(), 10);
    assert!(c.freq(9) < 0.0);
}

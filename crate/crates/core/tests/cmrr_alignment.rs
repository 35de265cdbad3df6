use num_complex::Complex64;
use wavemetro::cmrr::{cmrr_report, cmrr_spectrum, optimize_alignment, AlignmentParams, Band};
use wavemetro::synth::{impulse_train, photodiode_response, synth_balanced_pair, MismatchSpec};
use wavemetro::{forward_transform, RealWaveform, Spectrum};

const DT: f64 = 1e-12;
const N: usize = 2048;

fn pair(m: MismatchSpec) -> (RealWaveform, RealWaveform) {
    let stim = impulse_train(N, DT, &[300]).unwrap();
    let h = photodiode_response(60e9, DT, 400).unwrap();
    synth_balanced_pair(&stim, &h, &m).unwrap()
}

fn spectra(m: MismatchSpec) -> (Spectrum, Spectrum) {
    let (vp, vn) = pair(m);
    (forward_transform(&vp), forward_transform(&vn))
}

fn band_power(s: &Spectrum, band: &Band) -> f64 {
    band.bins(s).unwrap().iter().map(|&k| s.bins()[k].norm_sqr()).sum()
}

#[test]
fn recovers_gain_and_delay() {
    let (vp, vn) = spectra(MismatchSpec {
        gain: 0.8,
        delay: 5e-12,
        ..MismatchSpec::matched()
    });
    let band = Band::default_for(&vp);
    let a = optimize_alignment(&vp, &vn, &band, 100e-12).unwrap();
    assert!((a.alpha - 0.8).abs() < 1e-6, "alpha {}", a.alpha);
    assert!((a.tau - 5e-12).abs() < 1e-15, "tau {:e}", a.tau);
    assert!(a.residual < 1e-20 * band_power(&vp, &band), "residual {:e}", a.residual);
    assert!(!a.at_boundary);
}

#[test]
fn identical_arms_align_to_identity() {
    let (vp, vn) = spectra(MismatchSpec::matched());
    let band = Band::default_for(&vp);
    let a = optimize_alignment(&vp, &vn, &band, 100e-12).unwrap();
    assert!((a.alpha - 1.0).abs() < 1e-6);
    assert!(a.tau.abs() < 1e-15);
}

#[test]
fn ripple_limits_rejection() {
    // broadband arms and a fine ripple so the optimal scale stays at the
    // ripple mean
    let stim = impulse_train(8192, DT, &[300]).unwrap();
    let h = photodiode_response(300e9, DT, 400).unwrap();
    for (amp, law) in [(0.01, 46.0), (0.001, 66.0)] {
        let m = MismatchSpec {
            ripple_amp: amp,
            ripple_period_hz: 10e9,
            ..MismatchSpec::matched()
        };
        let (vp, vn) = synth_balanced_pair(&stim, &h, &m).unwrap();
        let (vp, vn) = (forward_transform(&vp), forward_transform(&vn));
        let band = Band::default_for(&vp);
        let a = optimize_alignment(&vp, &vn, &band, 100e-12).unwrap();
        assert!(a.residual > 0.0);
        let t = cmrr_spectrum(&vp, &vn, &a, &band).unwrap();
        let min = t.min_unclamped_rejection().unwrap();
        let exact = 20.0 * (2.0 / amp).log10();
        assert!((exact - law).abs() < 0.05);
        assert!((min - exact).abs() < 0.5, "min rejection {min}, law {exact}");
    }
}

#[test]
fn boundary_flag() {
    let (vp, vn) = spectra(MismatchSpec {
        gain: 1.0,
        delay: 10.4e-12,
        ..MismatchSpec::matched()
    });
    let band = Band::default_for(&vp);
    let a = optimize_alignment(&vp, &vn, &band, 10e-12).unwrap();
    assert!(a.at_boundary, "tau {:e}", a.tau);
    assert_eq!(a.tau, 10e-12);
}

#[test]
fn reciprocity() {
    let (vp, vn) = spectra(MismatchSpec {
        gain: 1.3,
        delay: -7.25e-12,
        ..MismatchSpec::matched()
    });
    let band = Band::default_for(&vp);
    let fwd = optimize_alignment(&vp, &vn, &band, 100e-12).unwrap();
    let rev = optimize_alignment(&vn, &vp, &band, 100e-12).unwrap();
    assert!((rev.alpha - 1.0 / fwd.alpha).abs() < 1e-6);
    assert!((rev.tau + fwd.tau).abs() < 1e-15);

    // with imperfect matching the trace at reciprocal parameters is unchanged
    let (vp, vn) = spectra(MismatchSpec {
        gain: 0.9,
        delay: 3e-12,
        ripple_amp: 0.02,
        ripple_period_hz: 55e9,
    });
    let a = optimize_alignment(&vp, &vn, &band, 100e-12).unwrap();
    let swapped = AlignmentParams::new(1.0 / a.alpha, -a.tau).unwrap();
    let t1 = cmrr_spectrum(&vp, &vn, &a, &band).unwrap();
    let t2 = cmrr_spectrum(&vn, &vp, &swapped, &band).unwrap();
    for (x, y) in t1.rejection_db.iter().zip(&t2.rejection_db) {
        assert!((x - y).abs() < 1e-6);
    }
}

#[test]
fn more_ripple_less_rejection() {
    let mut last = f64::INFINITY;
    for amp in [0.001, 0.003, 0.01, 0.03, 0.1] {
        let (vp, vn) = pair(MismatchSpec {
            gain: 0.95,
            delay: 2e-12,
            ripple_amp: amp,
            ripple_period_hz: 47e9,
        });
        let r = cmrr_report(&vp, &vn, None, 50e-12).unwrap();
        assert!(r.summary.min_rejection_db < last, "{amp}: {}", r.summary.min_rejection_db);
        last = r.summary.min_rejection_db;
    }
}

#[test]
fn photocurrent_balance_is_not_optimum() {
    let (vp, vn) = pair(MismatchSpec {
        gain: 0.9,
        delay: 4e-12,
        ripple_amp: 0.05,
        ripple_period_hz: 140e9,
    });
    let r = cmrr_report(&vp, &vn, None, 50e-12).unwrap();
    assert!((r.summary.alpha_dc - 0.9).abs() < 1e-9, "{}", r.summary.alpha_dc);
    assert!((r.summary.photocurrent_ratio * r.summary.alpha_dc - 1.0).abs() < 1e-12);
    assert!((r.summary.alpha_dc - r.params.alpha).abs() > 1e-3, "alpha* {}", r.params.alpha);
}

#[test]
fn report_floor_limited_for_exact_pair() {
    let (vp, vn) = pair(MismatchSpec {
        gain: 0.8,
        delay: 5e-12,
        ..MismatchSpec::matched()
    });
    let r = cmrr_report(&vp, &vn, None, 100e-12).unwrap();
    assert!(r.summary.min_rejection_db >= 120.0);
    assert!(r.summary.median_rejection_db >= 120.0);
}

#[test]
fn report_errors() {
    let (vp, vn) = pair(MismatchSpec::matched());
    assert!(cmrr_report(&vp, &vn, Some(Band { lo: 1e9, hi: 1e9 }), 1e-11).is_err());
    let short = RealWaveform::new(vn.samples()[..100].to_vec(), DT, 0.0).unwrap();
    assert!(cmrr_report(&vp, &short, None, 1e-11).is_err());
}

#[test]
fn common_response_cancels() {
    let (vp, vn) = spectra(MismatchSpec {
        gain: 1.1,
        delay: 1e-12,
        ripple_amp: 0.01,
        ripple_period_hz: 33e9,
    });
    let band = Band::default_for(&vp);
    let a = optimize_alignment(&vp, &vn, &band, 20e-12).unwrap();
    let h: Vec<Complex64> = (0..vp.len())
        .map(|k| Complex64::from_polar(1.0 / (1.0 + k as f64 / 300.0), -0.002 * k as f64))
        .collect();
    let mul = |s: &Spectrum| s.with_bins(s.bins().iter().zip(&h).map(|(a, b)| a * b).collect()).unwrap();
    let t1 = cmrr_spectrum(&vp, &vn, &a, &band).unwrap();
    let t2 = cmrr_spectrum(&mul(&vp), &mul(&vn), &a, &band).unwrap();
    for (x, y) in t1.cmrr_db.iter().zip(&t2.cmrr_db) {
        assert!((x - y).abs() < 1e-9);
    }
}

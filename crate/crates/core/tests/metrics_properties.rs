use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use wavemetro::metrics::{
    ber_from_snr, ber_sweep, count_bit_errors, decide_symbols, evm, q_function, snr_from_evm, wilson_interval,
    EvmMode, EvmNormalization,
};
use wavemetro::synth::{add_awgn, seeded_rng};
use wavemetro::{map_symbols, Bit, Modulation, SymbolFrame};

fn random_frame(m: Modulation, n: usize, seed: u64) -> SymbolFrame {
    let mut rng = seeded_rng(seed);
    let bits: Vec<Bit> = (0..n * m.bits_per_symbol()).map(|_| rng.random::<bool>() as Bit).collect();
    map_symbols(&bits, m).unwrap()
}

fn scaled(f: &SymbolFrame, c: f64) -> SymbolFrame {
    f.with_symbols(f.symbols().iter().map(|s| s * c).collect()).unwrap()
}

#[test]
fn decide_inverts_map_exhaustively() {
    for m in [Modulation::Qpsk, Modulation::Qam16] {
        let k = m.bits_per_symbol();
        let bits: Vec<Bit> = (0..m.order())
            .flat_map(|i| (0..k).rev().map(move |b| ((i >> b) & 1) as Bit))
            .collect();
        let frame = map_symbols(&bits, m).unwrap();
        let (points, decided) = decide_symbols(&frame);
        assert_eq!(decided, bits);
        assert_eq!(points, frame.symbols());
    }
}

#[test]
fn snr_inversion_data_aided() {
    for (m, snr_db) in [(Modulation::Qpsk, 10.0), (Modulation::Qpsk, 20.0), (Modulation::Qam16, 16.0)] {
        let tx = random_frame(m, 100_000, 3);
        let rx = add_awgn(&tx, snr_db, 4).unwrap();
        let e = evm(&rx, Some(&tx), EvmNormalization::Average, EvmMode::DataAided).unwrap();
        let snr = snr_from_evm(&e);
        let injected = 10f64.powf(snr_db / 10.0);
        assert!((snr.linear / injected - 1.0).abs() < 0.02, "{m:?} {snr_db}: {}", snr.linear);
        assert!(!snr.bias_warning);
    }
}

#[test]
fn decision_directed_is_optimistic_at_low_snr() {
    let tx = random_frame(Modulation::Qam16, 20_000, 8);
    let rx = add_awgn(&tx, 8.0, 9).unwrap();
    let da = evm(&rx, Some(&tx), EvmNormalization::Average, EvmMode::DataAided).unwrap();
    let dd = evm(&rx, None, EvmNormalization::Average, EvmMode::DecisionDirected).unwrap();
    assert!(dd.evm_rms < da.evm_rms);
    assert!(snr_from_evm(&dd).bias_warning);
}

#[test]
fn qpsk_ten_db_counted() {
    let expect = q_function(10f64.sqrt());
    assert!((expect - 7.827e-4).abs() < 1e-6);
    assert_eq!(ber_from_snr(10.0, Modulation::Qpsk).unwrap(), expect);
    let sweep = ber_sweep(Modulation::Qpsk, &[10.0], 5_000_000, 77).unwrap();
    let p = &sweep[0];
    assert_eq!(p.n_bits, 10_000_000);
    assert_eq!(p.ber_counted, p.errors as f64 / p.n_bits as f64);
    assert!((p.ber_counted / expect - 1.0).abs() < 0.05, "counted {}", p.ber_counted);
    assert!(p.ci_lo <= expect && expect <= p.ci_hi);
}

#[test]
fn sweep_is_deterministic() {
    let a = ber_sweep(Modulation::Qam16, &[12.0, 14.0], 150_000, 1).unwrap();
    let b = ber_sweep(Modulation::Qam16, &[12.0, 14.0], 150_000, 1).unwrap();
    let c = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| ber_sweep(Modulation::Qam16, &[12.0, 14.0], 150_000, 1).unwrap());
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn counted_ber_exact() {
    let est = count_bit_errors(&[0, 1, 1, 0, 1], &[0, 0, 1, 1, 1]).unwrap();
    assert_eq!(est.errors, Some(2));
    assert_eq!(est.ber, 2.0 / 5.0);
    assert!(count_bit_errors(&[0, 1], &[0]).is_err());
    let (lo, hi) = wilson_interval(0, 1000, 1.96);
    assert_eq!(lo, 0.0);
    assert!(hi > 0.0 && hi < 0.01);
}

proptest! {
    #[test]
    fn evm_scale_equivariance(seed in any::<u64>(), c in 0.01f64..100.0, snr in 0.0f64..30.0) {
        let tx = random_frame(Modulation::Qam16, 500, seed);
        let rx = add_awgn(&tx, snr, seed ^ 1).unwrap();
        let a = evm(&rx, Some(&tx), EvmNormalization::Average, EvmMode::DataAided).unwrap();
        let b = evm(&scaled(&rx, c), Some(&scaled(&tx, c)), EvmNormalization::Average, EvmMode::DataAided).unwrap();
        prop_assert!((a.evm_rms - b.evm_rms).abs() <= 1e-12 * a.evm_rms.max(1e-300));
        prop_assert_eq!(a.evm_percent, 100.0 * a.evm_rms);
    }

    #[test]
    fn small_perturbations_decode(seed in any::<u64>(), r in 0.0f64..0.3, th in 0.0f64..6.3) {
        let tx = random_frame(Modulation::Qam16, 64, seed);
        let kick = Complex64::from_polar(r / 10f64.sqrt(), th);
        let rx = tx.with_symbols(tx.symbols().iter().map(|s| s + kick).collect()).unwrap();
        let (_, bits) = decide_symbols(&rx);
        prop_assert_eq!(Some(bits.as_slice()), tx.source_bits());
    }

    #[test]
    fn wilson_brackets_estimate(n in 1u64..1_000_000, frac in 0.0f64..1.0) {
        let e = ((n as f64) * frac) as u64;
        let (lo, hi) = wilson_interval(e, n, 1.96);
        let p = e as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
    }
}

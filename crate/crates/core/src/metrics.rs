//! Constellation metrics: EVM, SNR and BER predicted from EVM, hard
//! decisions and bit-error counting.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::modulation::{index_to_bits, map_symbols, Bit, Modulation, SymbolFrame};
use crate::synth::{awgn_in_place, record_seed, seeded_rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvmNormalization {
    /// Mean power of the reference symbols.
    Average,
    /// Largest constellation point power.
    Peak,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvmMode {
    /// Error against known transmitted symbols.
    DataAided,
    /// Error against the nearest constellation point.
    DecisionDirected,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvmResult {
    /// RMS error vector as a fraction.
    pub evm_rms: f64,
    pub evm_percent: f64,
    pub normalization: EvmNormalization,
    pub mode: EvmMode,
    pub n_symbols: usize,
}

/// RMS error vector magnitude of `received`.
///
/// Data-aided mode needs `reference` of the same length; decision-directed
/// mode compares with the nearest point of the received frame's modulation.
pub fn evm(
    received: &SymbolFrame,
    reference: Option<&SymbolFrame>,
    normalization: EvmNormalization,
    mode: EvmMode,
) -> Result<EvmResult> {
    if received.is_empty() {
        return Err(Error::validation("received frame is empty"));
    }
    let modulation = received.modulation();
    let ideal: Vec<Complex64> = match mode {
        EvmMode::DataAided => {
            let reference = reference.ok_or_else(|| Error::validation("data-aided EVM needs a reference frame"))?;
            if reference.len() != received.len() {
                return Err(Error::validation(format!(
                    "received frame has {} symbols, reference has {}",
                    received.len(),
                    reference.len()
                )));
            }
            reference.symbols().to_vec()
        }
        EvmMode::DecisionDirected => received
            .symbols()
            .iter()
            .map(|&z| modulation.point(modulation.nearest(z)))
            .collect(),
    };
    let n = received.len() as f64;
    let err: f64 = received
        .symbols()
        .iter()
        .zip(&ideal)
        .map(|(r, s)| (r - s).norm_sqr())
        .sum::<f64>()
        / n;
    let p_norm = match normalization {
        EvmNormalization::Average => ideal.iter().map(|s| s.norm_sqr()).sum::<f64>() / n,
        EvmNormalization::Peak => modulation.peak_power(),
    };
    if p_norm <= 0.0 {
        return Err(Error::validation("reference symbols have zero power"));
    }
    let evm_rms = (err / p_norm).sqrt();
    Ok(EvmResult {
        evm_rms,
        evm_percent: 100.0 * evm_rms,
        normalization,
        mode,
        n_symbols: received.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrEstimate {
    /// Linear SNR; `f64::INFINITY` when the EVM is zero.
    pub linear: f64,
    pub db: f64,
    /// Set unless the EVM was data-aided with average normalization, the
    /// only variant for which `1/EVM^2` is an unbiased SNR under AWGN.
    pub bias_warning: bool,
}

/// `SNR = 1 / EVM^2`.
pub fn snr_from_evm(e: &EvmResult) -> SnrEstimate {
    let linear = if e.evm_rms == 0.0 { f64::INFINITY } else { 1.0 / (e.evm_rms * e.evm_rms) };
    SnrEstimate {
        linear,
        db: 10.0 * linear.log10(),
        bias_warning: e.mode != EvmMode::DataAided || e.normalization != EvmNormalization::Average,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BerSource {
    Counted,
    EvmPredicted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerEstimate {
    pub ber: f64,
    pub source: BerSource,
    /// Counted estimates only.
    pub n_bits: Option<u64>,
    pub errors: Option<u64>,
    pub wilson_ci95: Option<(f64, f64)>,
}

/// Gaussian tail probability `Q(x) = erfc(x / sqrt 2) / 2`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Gray-coded square M-QAM bit error ratio at linear symbol SNR `snr`:
/// `(4 / log2 M)(1 - 1/sqrt M) Q(sqrt(3 snr / (M - 1)))`.
pub fn ber_from_snr(snr: f64, modulation: Modulation) -> Result<f64> {
    if snr.is_nan() || snr < 0.0 {
        return Err(Error::validation(format!("SNR {snr} is not usable")));
    }
    let m = modulation.order() as f64;
    if m.sqrt().fract() != 0.0 {
        return Err(Error::UnsupportedModulation(modulation.order()));
    }
    let k = modulation.bits_per_symbol() as f64;
    let ber = (4.0 / k) * (1.0 - 1.0 / m.sqrt()) * q_function((3.0 * snr / (m - 1.0)).sqrt());
    Ok(ber.clamp(0.0, 1.0))
}

/// BER predicted from a measured EVM via `SNR = 1 / EVM^2`.
pub fn ber_from_evm(e: &EvmResult, modulation: Modulation) -> Result<BerEstimate> {
    let snr = snr_from_evm(e).linear;
    Ok(BerEstimate {
        ber: ber_from_snr(snr, modulation)?,
        source: BerSource::EvmPredicted,
        n_bits: None,
        errors: None,
        wilson_ci95: None,
    })
}

/// Hard decisions: nearest constellation point per symbol (exact ties go to
/// the smaller bit value) and the Gray-demapped bits.
pub fn decide_symbols(received: &SymbolFrame) -> (Vec<Complex64>, Vec<Bit>) {
    let m = received.modulation();
    let k = m.bits_per_symbol();
    let mut symbols = Vec::with_capacity(received.len());
    let mut bits = Vec::with_capacity(received.len() * k);
    for &z in received.symbols() {
        let idx = m.nearest(z);
        symbols.push(m.point(idx));
        index_to_bits(idx, k, &mut bits);
    }
    (symbols, bits)
}

const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `errors` successes in `n` trials.
pub fn wilson_interval(errors: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if errors == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if errors as f64 == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// `p +/- k sqrt(p (1 - p) / n)`, clamped to [0, 1].
pub fn binomial_interval(p: f64, n: u64, k_sigma: f64) -> (f64, f64) {
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    ((p - k_sigma * sigma).max(0.0), (p + k_sigma * sigma).min(1.0))
}

/// Exact bit error ratio between two streams with a Wilson 95% interval.
pub fn count_bit_errors(decided: &[Bit], truth: &[Bit]) -> Result<BerEstimate> {
    if decided.len() != truth.len() {
        return Err(Error::validation(format!(
            "decided stream has {} bits, truth has {}",
            decided.len(),
            truth.len()
        )));
    }
    if decided.is_empty() {
        return Err(Error::validation("bit streams are empty"));
    }
    let errors = decided.iter().zip(truth).filter(|(a, b)| a != b).count() as u64;
    let n = decided.len() as u64;
    Ok(BerEstimate {
        ber: errors as f64 / n as f64,
        source: BerSource::Counted,
        n_bits: Some(n),
        errors: Some(errors),
        wilson_ci95: Some(wilson_interval(errors, n, Z95)),
    })
}

/// One SNR point of a counted-versus-predicted BER campaign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub evm_rms: f64,
    pub ber_counted: f64,
    pub ber_from_evm: f64,
    /// Wilson 95% interval of the counted BER.
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n_bits: u64,
    pub errors: u64,
}

/// Symbols per independently seeded record in [`ber_sweep`].
pub const SWEEP_RECORD_SYMBOLS: usize = 1 << 16;

struct RecordTally {
    err_power: f64,
    ref_power: f64,
    bit_errors: u64,
    bits: u64,
}

fn sweep_record(modulation: Modulation, snr_db: f64, n_symbols: usize, seed: u64) -> Result<RecordTally> {
    let k = modulation.bits_per_symbol();
    let mut rng = seeded_rng(record_seed(seed, 0));
    let bits: Vec<Bit> = (0..n_symbols * k).map(|_| rng.random::<bool>() as Bit).collect();
    let tx = map_symbols(&bits, modulation)?;
    let mut rx = tx.symbols().to_vec();
    awgn_in_place(&mut rx, snr_db, record_seed(seed, 1))?;
    let err_power = rx.iter().zip(tx.symbols()).map(|(r, s)| (r - s).norm_sqr()).sum();
    let ref_power = tx.symbols().iter().map(|s| s.norm_sqr()).sum();
    let (_, decided) = decide_symbols(&SymbolFrame::new(rx, modulation, None)?);
    let bit_errors = decided.iter().zip(&bits).filter(|(a, b)| a != b).count() as u64;
    Ok(RecordTally {
        err_power,
        ref_power,
        bit_errors,
        bits: bits.len() as u64,
    })
}

/// Counted and EVM-predicted BER over AWGN at each SNR.
///
/// Every SNR point draws `n_symbols` random symbols in records of
/// [`SWEEP_RECORD_SYMBOLS`], each seeded from `(seed, point, record)`.
/// Records run in parallel and are reduced in index order, so the result
/// does not depend on the thread count.
pub fn ber_sweep(modulation: Modulation, snr_db: &[f64], n_symbols: usize, seed: u64) -> Result<Vec<SweepPoint>> {
    if n_symbols == 0 {
        return Err(Error::validation("symbol count must be positive"));
    }
    snr_db
        .iter()
        .enumerate()
        .map(|(point, &snr)| {
            if !snr.is_finite() {
                return Err(Error::validation(format!("sweep SNR {snr} dB must be finite")));
            }
            let point_seed = record_seed(seed, point as u64);
            let n_records = n_symbols.div_ceil(SWEEP_RECORD_SYMBOLS);
            let tallies: Vec<RecordTally> = (0..n_records)
                .into_par_iter()
                .map(|r| {
                    let len = SWEEP_RECORD_SYMBOLS.min(n_symbols - r * SWEEP_RECORD_SYMBOLS);
                    sweep_record(modulation, snr, len, record_seed(point_seed, r as u64))
                })
                .collect::<Result<_>>()?;
            let (mut err_power, mut ref_power, mut errors, mut bits) = (0.0, 0.0, 0u64, 0u64);
            for t in &tallies {
                err_power += t.err_power;
                ref_power += t.ref_power;
                errors += t.bit_errors;
                bits += t.bits;
            }
            let evm_rms = (err_power / ref_power).sqrt();
            let predicted = ber_from_snr(1.0 / (evm_rms * evm_rms), modulation)?;
            let (ci_lo, ci_hi) = wilson_interval(errors, bits, Z95);
            Ok(SweepPoint {
                snr_db: snr,
                evm_rms,
                ber_counted: errors as f64 / bits as f64,
                ber_from_evm: predicted,
                ci_lo,
                ci_hi,
                n_bits: bits,
                errors,
            })
        })
        .collect()
}

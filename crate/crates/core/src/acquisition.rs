//! Digitizer-side algorithms.
//!
//! Equivalent-time interleaving: a periodic pattern of `L` symbols at rate
//! `f_sym`, sampled by a scope at `f_scope` with `f_scope / f_sym = p/q`
//! reduced, lands sample `k` at `k q / p` symbols. Modulo the pattern period
//! that is lattice slot `(k q) mod (p L)` on a grid of `p` points per symbol.
//! When `gcd(q, L) = 1` the first `p L` samples visit every slot once, so a
//! pure reordering yields the pattern at `p f_sym` samples per second.
//!
//! Trigger-jitter compensation: each record carries a reference tone on a
//! second channel. The tone phase from an in-phase/quadrature projection
//! gives the record's timing offset relative to the ensemble, which is then
//! removed by fractional delay before averaging.

use std::f64::consts::PI;
use std::ops::{AddAssign, Mul};

use num_complex::Complex64;
use num_integer::Integer;
use num_rational::Ratio;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rational::ExactRate;
use crate::signal::{fractional_delay, ComplexWaveform, RealWaveform};

/// Reduced ratio `p/q` of scope sample rate to symbol rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RateRatio {
    p: u64,
    q: u64,
}

impl RateRatio {
    pub fn new(p: u64, q: u64) -> Result<Self> {
        if p == 0 || q == 0 {
            return Err(Error::validation(format!("rate ratio {p}/{q} must have positive terms")));
        }
        let g = p.gcd(&q);
        Ok(Self { p: p / g, q: q / g })
    }

    pub fn from_rates(f_scope: ExactRate, f_sym: ExactRate) -> Result<Self> {
        let r = f_scope.ratio() / f_sym.ratio();
        let (p, q) = (*r.numer(), *r.denom());
        if p > u64::MAX as u128 || q > u64::MAX as u128 {
            return Err(Error::validation(format!("rate ratio {p}/{q} too large")));
        }
        Self::new(p as u64, q as u64)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    /// Nominal scope samples per symbol, `p / q`.
    pub fn points_per_symbol(&self) -> f64 {
        self.p as f64 / self.q as f64
    }
}

/// Sample-to-slot mapping for equivalent-time reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct InterleavePlan {
    ratio: RateRatio,
    pattern_len: u64,
    symbol_rate: ExactRate,
    positions: Vec<u64>,
    degenerate: bool,
}

impl InterleavePlan {
    pub fn ratio(&self) -> RateRatio {
        self.ratio
    }

    pub fn pattern_len(&self) -> u64 {
        self.pattern_len
    }

    pub fn symbol_rate(&self) -> ExactRate {
        self.symbol_rate
    }

    /// Slot `u_k = (k q) mod (p L)` of every sample `k < p L`.
    pub fn positions(&self) -> &[u64] {
        &self.positions
    }

    /// Samples needed for one full reconstruction, `p L`.
    pub fn required_samples(&self) -> u64 {
        self.ratio.p * self.pattern_len
    }

    /// Pattern repetitions spanned by `required_samples`, equal to `q`.
    pub fn covered_repetitions(&self) -> u64 {
        self.ratio.q
    }

    /// Reconstructed sample rate `p f_sym`.
    pub fn effective_rate(&self) -> ExactRate {
        ExactRate::from_ratio(self.symbol_rate.ratio() * Ratio::from_integer(self.ratio.p as u128))
            .expect("positive by construction")
    }

    /// Reconstructed sample interval `1 / (p f_sym)`, exact.
    pub fn out_dt(&self) -> Ratio<u128> {
        self.effective_rate().ratio().recip()
    }

    pub fn out_dt_f64(&self) -> f64 {
        self.effective_rate().recip_f64()
    }

    /// `q = 1`: the scope is synchronous with the symbol clock and
    /// interleaving adds no new sample phases.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }
}

/// Builds the interleave plan for exact scope and symbol rates.
///
/// Fails with [`Error::Coprimality`] when `gcd(q, L) != 1`. A ratio with
/// `q = 1` is accepted but flagged by [`InterleavePlan::is_degenerate`].
pub fn interleave_plan(f_scope: ExactRate, f_sym: ExactRate, pattern_len: u64) -> Result<InterleavePlan> {
    if pattern_len == 0 {
        return Err(Error::validation("pattern length must be at least 1"));
    }
    let ratio = RateRatio::from_rates(f_scope, f_sym)?;
    let (p, q) = (ratio.p, ratio.q);
    let g = q.gcd(&pattern_len);
    let slots = p
        .checked_mul(pattern_len)
        .ok_or_else(|| Error::validation("p * L overflows"))?;
    if g != 1 {
        return Err(Error::Coprimality {
            q,
            pattern_len,
            achievable: slots / g,
        });
    }
    let positions = (0..slots)
        .map(|k| ((k as u128 * q as u128) % slots as u128) as u64)
        .collect();
    Ok(InterleavePlan {
        ratio,
        pattern_len,
        symbol_rate: f_sym,
        positions,
        degenerate: q == 1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReconstructMode {
    /// Exactly `required_samples` inputs.
    Strict,
    /// Any whole number of `required_samples` blocks, averaged slot by slot.
    Average,
}

/// Reorders acquired samples into slot order. No interpolation is done.
pub fn interleave_samples<T>(samples: &[T], plan: &InterleavePlan, mode: ReconstructMode) -> Result<Vec<T>>
where
    T: Copy + Default + AddAssign + Mul<f64, Output = T>,
{
    let block = plan.required_samples() as usize;
    let ok = match mode {
        ReconstructMode::Strict => samples.len() == block,
        ReconstructMode::Average => !samples.is_empty() && samples.len().is_multiple_of(block),
    };
    if !ok {
        return Err(Error::validation(format!(
            "{mode:?} reconstruction needs {} {block} samples, got {}",
            if mode == ReconstructMode::Strict { "exactly" } else { "a multiple of" },
            samples.len()
        )));
    }
    let mut out = vec![T::default(); block];
    for chunk in samples.chunks_exact(block) {
        for (&slot, &x) in plan.positions.iter().zip(chunk) {
            out[slot as usize] += x;
        }
    }
    let reps = samples.len() / block;
    if reps > 1 {
        let scale = 1.0 / reps as f64;
        out.iter_mut().for_each(|x| *x = *x * scale);
    }
    Ok(out)
}

/// Equivalent-time reconstruction of a real record.
pub fn interleave_reconstruct(samples: &[f64], plan: &InterleavePlan, mode: ReconstructMode) -> Result<RealWaveform> {
    RealWaveform::new(interleave_samples(samples, plan, mode)?, plan.out_dt_f64(), 0.0)
}

/// Equivalent-time reconstruction of a complex record.
pub fn interleave_reconstruct_complex(
    samples: &[Complex64],
    plan: &InterleavePlan,
    mode: ReconstructMode,
) -> Result<ComplexWaveform> {
    ComplexWaveform::new(interleave_samples(samples, plan, mode)?, plan.out_dt_f64(), 0.0)
}

/// Reference tones must hold at least this many cycles.
pub const MIN_REF_CYCLES: f64 = 8.0;
/// Minimum tone-to-residual power ratio of a usable reference.
pub const MIN_REF_SNR: f64 = 1.0;

/// Per-record timing offsets relative to the ensemble median.
#[derive(Debug, Clone, PartialEq)]
pub struct JitterEstimate {
    /// Positive values mean the record is late.
    pub per_record_dt: Vec<f64>,
    pub f_ref: f64,
    /// Offsets are only known modulo one reference period: `1 / (2 f_ref)`.
    pub ambiguity_range: f64,
    /// Offset beyond a quarter reference period, where a wrapped phase is
    /// plausible.
    pub ambiguous: Vec<bool>,
    /// Reference tone amplitude per record.
    pub amplitudes: Vec<f64>,
}

fn wrap_phase(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y <= -PI {
        y + 2.0 * PI
    } else {
        y
    }
}

/// Phase and amplitude of the reference tone in one record.
fn tone_phase(x: &RealWaveform, f_ref: f64, record: usize) -> Result<(f64, f64)> {
    let n = x.len();
    let dt = x.dt();
    if f_ref >= 0.5 / dt {
        return Err(Error::validation(format!(
            "reference {f_ref:e} Hz is not below the Nyquist frequency {:e} Hz",
            0.5 / dt
        )));
    }
    let cycles = f_ref * n as f64 * dt;
    if cycles < MIN_REF_CYCLES {
        return Err(Error::validation(format!(
            "record {record} spans {cycles:.2} reference cycles; at least {MIN_REF_CYCLES} needed"
        )));
    }
    let whole = (cycles - cycles.round()).abs() < 1e-9 * cycles.max(1.0);
    let window: Vec<f64> = if whole || n < 2 {
        vec![1.0; n]
    } else {
        (0..n)
            .map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / (n - 1) as f64).cos()))
            .collect()
    };
    let norm = 2.0 / window.iter().sum::<f64>();
    let w = 2.0 * PI * f_ref * dt;
    let (mut i_sum, mut q_sum) = (0.0, 0.0);
    for (k, (&v, &g)) in x.samples().iter().zip(&window).enumerate() {
        let arg = w * k as f64;
        i_sum += g * v * arg.cos();
        q_sum -= g * v * arg.sin();
    }
    let (i, q) = (norm * i_sum, norm * q_sum);
    let amp = i.hypot(q);

    let mean = x.samples().iter().sum::<f64>() / n as f64;
    let var = x.samples().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    let tone = amp * amp / 2.0;
    let residual = (var - tone).max(0.0);
    let ratio = if residual > 0.0 { tone / residual } else if tone > 0.0 { f64::INFINITY } else { 0.0 };
    if !(ratio >= MIN_REF_SNR) || amp == 0.0 {
        return Err(Error::WeakReference { record, ratio });
    }
    Ok((q.atan2(i), amp))
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Estimates each record's timing offset from the phase of a reference tone
/// at `f_ref`. Offsets are relative to the ensemble median phase and wrap
/// into `+/- 1 / (2 f_ref)`.
pub fn iq_jitter_estimate(ref_records: &[RealWaveform], f_ref: f64) -> Result<JitterEstimate> {
    if ref_records.is_empty() {
        return Err(Error::validation("no reference records"));
    }
    if !(f_ref.is_finite() && f_ref > 0.0) {
        return Err(Error::validation(format!("reference frequency must be positive, got {f_ref}")));
    }
    let tones: Vec<(f64, f64)> = ref_records
        .par_iter()
        .enumerate()
        .map(|(i, r)| tone_phase(r, f_ref, i))
        .collect::<Result<_>>()?;

    // rotate to the circular mean first so the median is taken away from
    // the +/- pi cut
    let sum: Complex64 = tones.iter().map(|&(phi, _)| Complex64::from_polar(1.0, phi)).sum();
    let centre = if sum.norm() > 1e-9 * tones.len() as f64 { sum.arg() } else { tones[0].0 };
    let deviations: Vec<f64> = tones.iter().map(|&(phi, _)| wrap_phase(phi - centre)).collect();
    let mid = median(&mut deviations.clone());

    let omega = 2.0 * PI * f_ref;
    let per_record_dt: Vec<f64> = deviations.iter().map(|&d| -wrap_phase(d - mid) / omega).collect();
    let quarter = 0.25 / f_ref;
    Ok(JitterEstimate {
        ambiguous: per_record_dt.iter().map(|dt| dt.abs() > quarter).collect(),
        per_record_dt,
        f_ref,
        ambiguity_range: 0.5 / f_ref,
        amplitudes: tones.iter().map(|&(_, a)| a).collect(),
    })
}

/// Advances each record by its estimated offset and averages the ensemble.
pub fn iq_jitter_compensate(signal_records: &[RealWaveform], estimate: &JitterEstimate) -> Result<RealWaveform> {
    if signal_records.len() != estimate.per_record_dt.len() {
        return Err(Error::validation(format!(
            "{} signal records but {} jitter estimates",
            signal_records.len(),
            estimate.per_record_dt.len()
        )));
    }
    let first = &signal_records[0];
    if let Some(i) = signal_records
        .iter()
        .position(|r| r.len() != first.len() || (r.dt() - first.dt()).abs() > 1e-12 * first.dt())
    {
        return Err(Error::validation(format!("record {i} does not share the grid of record 0")));
    }
    let aligned: Vec<RealWaveform> = signal_records
        .par_iter()
        .zip(&estimate.per_record_dt)
        .map(|(r, &dt)| fractional_delay(r, -dt))
        .collect::<Result<_>>()?;
    average(&aligned)
}

/// Sample-wise mean of records sharing one grid.
pub fn average(records: &[RealWaveform]) -> Result<RealWaveform> {
    let first = records.first().ok_or_else(|| Error::validation("no records to average"))?;
    let mut acc = vec![0.0; first.len()];
    for r in records {
        if r.len() != acc.len() {
            return Err(Error::validation("records differ in length"));
        }
        acc.iter_mut().zip(r.samples()).for_each(|(a, &x)| *a += x);
    }
    let scale = 1.0 / records.len() as f64;
    acc.iter_mut().for_each(|a| *a *= scale);
    RealWaveform::new(acc, first.dt(), first.t0())
}

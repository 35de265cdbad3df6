//! Periodic root-raised-cosine pulse shaping evaluated on exact rational
//! sample grids.
//!
//! The symbol pattern is treated as periodic with period `L` symbols. For a
//! grid of `p/q` samples per symbol every sample time is a multiple of `1/p`
//! symbol, so samples are computed from an integer lattice index reduced
//! modulo `p L`. Two grids that land on the same lattice point produce
//! bit-identical values.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_integer::Integer;

use crate::error::{Error, Result};
use crate::modulation::SymbolFrame;
use crate::rational::ExactRate;
use crate::signal::ComplexWaveform;

/// Root-raised-cosine impulse response with unit symbol period and unit
/// energy, evaluated at `t` symbols.
pub fn rrc_impulse(t: f64, rolloff: f64) -> f64 {
    let b = rolloff;
    if t == 0.0 {
        return 1.0 - b + 4.0 * b / PI;
    }
    let x = 4.0 * b * t;
    if (1.0 - x * x).abs() < 1e-10 {
        let a = PI / (4.0 * b);
        return b / 2f64.sqrt() * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    ((PI * t * (1.0 - b)).sin() + x * (PI * t * (1.0 + b)).cos()) / (PI * t * (1.0 - x * x))
}

/// Pulse-shaping parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseConfig {
    /// Excess bandwidth in (0, 1].
    pub rolloff: f64,
    /// Total filter span in symbols (at least 4).
    pub span_symbols: u32,
    /// Output grid, exact samples per symbol.
    pub samples_per_symbol: ExactRate,
    /// Symbol rate in baud; only sets the output sample interval.
    pub symbol_rate: ExactRate,
}

impl PulseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rolloff > 0.0 && self.rolloff <= 1.0) {
            return Err(Error::validation(format!("rolloff {} outside (0, 1]", self.rolloff)));
        }
        if self.span_symbols < 4 {
            return Err(Error::validation(format!(
                "filter span {} symbols is shorter than 4",
                self.span_symbols
            )));
        }
        let p = self.samples_per_symbol.numer();
        if p > u64::MAX as u128 {
            return Err(Error::validation("samples-per-symbol numerator too large"));
        }
        Ok(())
    }
}

/// A periodic symbol pattern convolved with a truncated RRC pulse, sampled on
/// the `1/p`-symbol lattice.
#[derive(Debug, Clone)]
pub struct PeriodicShaper {
    symbols: Vec<Complex64>,
    rolloff: f64,
    span_symbols: u32,
    lattice: u64,
}

impl PeriodicShaper {
    /// `lattice` is the number of lattice points per symbol (`p`).
    pub fn new(symbols: Vec<Complex64>, rolloff: f64, span_symbols: u32, lattice: u64) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::validation("symbol pattern is empty"));
        }
        if lattice == 0 {
            return Err(Error::validation("lattice resolution must be positive"));
        }
        Ok(Self {
            symbols,
            rolloff,
            span_symbols,
            lattice,
        })
    }

    pub fn pattern_len(&self) -> usize {
        self.symbols.len()
    }

    pub fn lattice(&self) -> u64 {
        self.lattice
    }

    /// Lattice points in one pattern period, `p L`.
    pub fn period_points(&self) -> u128 {
        self.lattice as u128 * self.symbols.len() as u128
    }

    /// Waveform value at time `n / p` symbols.
    pub fn value_at(&self, n: u128) -> Complex64 {
        let p = self.lattice as i128;
        let len = self.symbols.len() as i128;
        let n = (n % self.period_points()) as i128;
        // taps satisfy 2 |n - j p| <= span p
        let reach = self.span_symbols as i128 * p;
        let j_lo = Integer::div_ceil(&(2 * n - reach), &(2 * p));
        let j_hi = Integer::div_floor(&(2 * n + reach), &(2 * p));
        let mut acc = Complex64::new(0.0, 0.0);
        for j in j_lo..=j_hi {
            let sym = self.symbols[j.rem_euclid(len) as usize];
            if sym == Complex64::new(0.0, 0.0) {
                continue;
            }
            let t = (n - j * p) as f64 / p as f64;
            acc += sym * rrc_impulse(t, self.rolloff);
        }
        acc
    }
}

/// Shapes `frame` with a periodic RRC pulse and samples it at
/// `samples_per_symbol = p/q`.
///
/// Sample `k` sits at `k q / p` symbols. The record holds `L p r / q`
/// samples for `r` pattern repetitions; `r` defaults to the smallest value
/// making that an integer.
pub fn pulse_shape(frame: &SymbolFrame, config: &PulseConfig, repetitions: Option<u64>) -> Result<ComplexWaveform> {
    config.validate()?;
    let p = config.samples_per_symbol.numer();
    let q = config.samples_per_symbol.denom();
    let len = frame.len() as u128;
    let points = len * p;
    let reps = match repetitions {
        Some(0) => return Err(Error::validation("repetitions must be at least 1")),
        Some(r) => r as u128,
        None => q / points.gcd(&q),
    };
    if !(points * reps).is_multiple_of(q) {
        return Err(Error::validation(format!(
            "{reps} repetitions of {len} symbols at {p}/{q} samples/symbol is not a whole number of samples"
        )));
    }
    let n_samples = points * reps / q;
    let shaper = PeriodicShaper::new(frame.symbols().to_vec(), config.rolloff, config.span_symbols, p as u64)?;
    let samples = (0..n_samples).map(|k| shaper.value_at((k * q) % points)).collect();
    let dt = config.samples_per_symbol.recip_f64() * config.symbol_rate.recip_f64();
    ComplexWaveform::new(samples, dt, 0.0)
}

/// Receive-side matched RRC filter for a record with an integer number of
/// samples per symbol, applied by periodic convolution and scaled so a
/// transmitted unit symbol peaks at 1.
pub fn matched_filter(w: &ComplexWaveform, rolloff: f64, span_symbols: u32, samples_per_symbol: u32) -> Result<ComplexWaveform> {
    if samples_per_symbol == 0 {
        return Err(Error::validation("samples per symbol must be positive"));
    }
    let sps = samples_per_symbol as i64;
    let half = span_symbols as i64 * sps / 2;
    let taps: Vec<(i64, f64)> = (-half..=half)
        .map(|d| (d, rrc_impulse(d as f64 / sps as f64, rolloff) / sps as f64))
        .collect();
    let x = w.samples();
    let n = x.len() as i64;
    let out = (0..n)
        .map(|i| {
            taps.iter()
                .map(|&(d, h)| x[(i - d).rem_euclid(n) as usize] * h)
                .sum::<Complex64>()
        })
        .collect();
    ComplexWaveform::new(out, w.dt(), w.t0())
}

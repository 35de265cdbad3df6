//! Forward/reverse travelling-wave separation on a lossless line.
//!
//! The voltage spectrum measured at position `z_i` is modelled as
//! `V(z_i, w) = F(w) e^{-j b z_i} + G(w) e^{+j b z_i}` with `b = w / v`. Each
//! frequency bin is an independent overdetermined 2-unknown least-squares
//! problem, solved by a reorthogonalized QR factorization.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::signal::Spectrum;

/// Default condition-number threshold above which a bin is masked.
pub const DEFAULT_COND_THRESHOLD: f64 = 1e3;

/// Voltage spectra measured at several positions on a common grid.
#[derive(Debug, Clone)]
pub struct LineMeasurement {
    positions: Vec<f64>,
    spectra: Vec<Spectrum>,
    velocity: f64,
}

impl LineMeasurement {
    pub fn new(positions: Vec<f64>, spectra: Vec<Spectrum>, velocity: f64) -> Result<Self> {
        if positions.len() < 2 {
            return Err(Error::validation("at least two measurement positions are needed"));
        }
        if positions.len() != spectra.len() {
            return Err(Error::validation(format!(
                "{} positions but {} spectra",
                positions.len(),
                spectra.len()
            )));
        }
        if !(velocity.is_finite() && velocity > 0.0) {
            return Err(Error::validation(format!("phase velocity must be positive, got {velocity}")));
        }
        if let Some(z) = positions.iter().find(|z| !z.is_finite()) {
            return Err(Error::validation(format!("position {z} is not finite")));
        }
        for i in 0..positions.len() {
            for j in i + 1..positions.len() {
                if positions[i] == positions[j] {
                    return Err(Error::validation(format!(
                        "positions {i} and {j} coincide at {} m",
                        positions[i]
                    )));
                }
            }
        }
        if let Some(i) = spectra.iter().position(|s| !s.same_grid(&spectra[0])) {
            return Err(Error::validation(format!("spectrum {i} is not on the grid of spectrum 0")));
        }
        Ok(Self {
            positions,
            spectra,
            velocity,
        })
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn spectra(&self) -> &[Spectrum] {
        &self.spectra
    }

    pub fn velocity(&self) -> f64 {
        self.velocity
    }
}

/// Recovered forward and reverse waves, referenced to `z = 0`.
#[derive(Debug, Clone)]
pub struct WaveSplitResult {
    pub forward: Spectrum,
    pub reverse: Spectrum,
    /// 2-norm condition number of each bin's design matrix.
    pub condition: Vec<f64>,
    /// Bins whose condition exceeded the threshold; their forward and
    /// reverse values are NaN.
    pub singular_mask: Vec<bool>,
    /// Least-squares residual norm per bin (NaN where masked).
    pub residual: Vec<f64>,
    pub velocity: f64,
}

impl WaveSplitResult {
    pub fn unmasked_bins(&self) -> impl Iterator<Item = usize> + '_ {
        self.singular_mask.iter().enumerate().filter(|(_, &m)| !m).map(|(k, _)| k)
    }
}

fn nan() -> Complex64 {
    Complex64::new(f64::NAN, f64::NAN)
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

struct BinSolution {
    forward: Complex64,
    reverse: Complex64,
    condition: f64,
    residual: f64,
}

/// Least squares for one bin: columns `e^{-j b z}` and `e^{+j b z}`.
fn solve_bin(beta: f64, positions: &[f64], rhs: &[Complex64]) -> BinSolution {
    let a1: Vec<Complex64> = positions.iter().map(|&z| Complex64::from_polar(1.0, -beta * z)).collect();
    let a2: Vec<Complex64> = positions.iter().map(|&z| Complex64::from_polar(1.0, beta * z)).collect();

    // modified Gram-Schmidt, second pass for orthogonality
    let r11 = norm(&a1);
    let q1: Vec<Complex64> = a1.iter().map(|x| x / r11).collect();
    let mut v = a2.clone();
    let mut r12 = Complex64::new(0.0, 0.0);
    for _ in 0..2 {
        let c = dot(&q1, &v);
        r12 += c;
        v.iter_mut().zip(&q1).for_each(|(x, q)| *x -= c * q);
    }
    let r22 = norm(&v);

    // singular values of R from its trace and determinant
    let fro2 = r11 * r11 + r12.norm_sqr() + r22 * r22;
    let det = r11 * r22;
    let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
    let s_max = ((fro2 + disc) / 2.0).sqrt();
    let s_min = if s_max > 0.0 { det / s_max } else { 0.0 };
    let condition = if s_min > 0.0 { s_max / s_min } else { f64::INFINITY };
    if r22 == 0.0 || !condition.is_finite() {
        return BinSolution {
            forward: nan(),
            reverse: nan(),
            condition: f64::INFINITY,
            residual: f64::NAN,
        };
    }
    let q2: Vec<Complex64> = v.iter().map(|x| x / r22).collect();
    let y1 = dot(&q1, rhs);
    let y2 = dot(&q2, rhs);
    let reverse = y2 / r22;
    let forward = (y1 - r12 * reverse) / r11;
    let residual = rhs
        .iter()
        .zip(a1.iter().zip(&a2))
        .map(|(b, (x, y))| (b - x * forward - y * reverse).norm_sqr())
        .sum::<f64>()
        .sqrt();
    BinSolution {
        forward,
        reverse,
        condition,
        residual,
    }
}

/// Separates forward and reverse waves bin by bin. Bins whose design matrix
/// condition number exceeds `cond_threshold` are masked.
pub fn split_waves(m: &LineMeasurement, cond_threshold: f64) -> Result<WaveSplitResult> {
    if !(cond_threshold >= 1.0) {
        return Err(Error::validation(format!("condition threshold {cond_threshold} is below 1")));
    }
    let grid = &m.spectra[0];
    let solutions: Vec<BinSolution> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let beta = 2.0 * PI * grid.freq(k) / m.velocity;
            let rhs: Vec<Complex64> = m.spectra.iter().map(|s| s.bins()[k]).collect();
            solve_bin(beta, &m.positions, &rhs)
        })
        .collect();

    let singular_mask: Vec<bool> = solutions.iter().map(|s| !(s.condition <= cond_threshold)).collect();
    if singular_mask.iter().all(|&s| s) {
        return Err(Error::DegenerateGeometry);
    }
    let pick = |f: fn(&BinSolution) -> Complex64| -> Vec<Complex64> {
        solutions
            .iter()
            .zip(&singular_mask)
            .map(|(s, &masked)| if masked { nan() } else { f(s) })
            .collect()
    };
    let forward = grid.with_bins(pick(|s| s.forward))?;
    let reverse = grid.with_bins(pick(|s| s.reverse))?;
    Ok(WaveSplitResult {
        forward,
        reverse,
        condition: solutions.iter().map(|s| s.condition).collect(),
        residual: solutions
            .iter()
            .zip(&singular_mask)
            .map(|(s, &masked)| if masked { f64::NAN } else { s.residual })
            .collect(),
        singular_mask,
        velocity: m.velocity,
    })
}

/// Voltage spectrum at position `z`: `F e^{-j b z} + G e^{+j b z}`. Masked
/// bins stay NaN.
pub fn propagate(result: &WaveSplitResult, z: f64) -> Result<Spectrum> {
    if !z.is_finite() {
        return Err(Error::validation("position is not finite"));
    }
    let grid = &result.forward;
    let bins = (0..grid.len())
        .map(|k| {
            if result.singular_mask[k] {
                return nan();
            }
            let beta = 2.0 * PI * grid.freq(k) / result.velocity;
            result.forward.bins()[k] * Complex64::from_polar(1.0, -beta * z)
                + result.reverse.bins()[k] * Complex64::from_polar(1.0, beta * z)
        })
        .collect();
    grid.with_bins(bins)
}

/// Voltage spectra at `positions` for known forward and reverse waves; the
/// forward model used by [`split_waves`].
pub fn synthesize_line(forward: &Spectrum, reverse: &Spectrum, positions: &[f64], velocity: f64) -> Result<Vec<Spectrum>> {
    if !forward.same_grid(reverse) {
        return Err(Error::validation("forward and reverse spectra are on different grids"));
    }
    positions
        .iter()
        .map(|&z| {
            let bins = (0..forward.len())
                .map(|k| {
                    let beta = 2.0 * PI * forward.freq(k) / velocity;
                    forward.bins()[k] * Complex64::from_polar(1.0, -beta * z)
                        + reverse.bins()[k] * Complex64::from_polar(1.0, beta * z)
                })
                .collect();
            forward.with_bins(bins)
        })
        .collect()
}

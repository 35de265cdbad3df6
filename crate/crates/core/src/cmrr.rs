//! Common-mode rejection of a balanced photodetector with optimized scale and
//! time-shift alignment of the two arms.
//!
//! Per frequency bin the rejection figure is
//!
//! ```text
//! CMRR(f) = 20 log10 | (alpha e^{-j w tau} Vp(f) - Vn(f)) / (alpha e^{-j w tau} Vp(f) + Vn(f)) |
//! ```
//!
//! where `e^{-j w tau}` is a delay of `tau` seconds under the negative-exponent
//! transform used throughout the crate. `cmrr_db` is negative for well matched
//! arms; `rejection_db = -cmrr_db` is the conventional positive figure.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::signal::{forward_transform, inverse_transform, RealWaveform, Sidedness, Spectrum};

/// Numerical floor for `cmrr_db`.
pub const FLOOR_DB: f64 = -300.0;
/// Bins with `|denominator| < DEN_GUARD * max|denominator|` are excluded.
pub const DEN_GUARD: f64 = 1e-12;
/// Lower clamp for the closed-form scale.
pub const ALPHA_MIN: f64 = 1e-12;
/// Golden-section stopping width in seconds.
pub const TAU_TOL: f64 = 1e-18;

/// Closed frequency interval in hertz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return Err(Error::validation(format!("empty or invalid band [{lo:e}, {hi:e}] Hz")));
        }
        Ok(Self { lo, hi })
    }

    /// `[0.05, 0.8]` of the Nyquist frequency of the spectrum's record.
    pub fn default_for(s: &Spectrum) -> Self {
        let nyq = 0.5 / s.dt();
        Self {
            lo: 0.05 * nyq,
            hi: 0.8 * nyq,
        }
    }

    /// Indices of the bins of `s` inside the band.
    pub fn bins(&self, s: &Spectrum) -> Result<Vec<usize>> {
        let freqs = s.freqs();
        let (fmin, fmax) = freqs
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &f| (a.min(f), b.max(f)));
        let slack = 1e-9 * s.df();
        if self.lo < fmin - slack || self.hi > fmax + slack {
            return Err(Error::validation(format!(
                "band [{:e}, {:e}] Hz outside spectral support [{fmin:e}, {fmax:e}] Hz",
                self.lo, self.hi
            )));
        }
        let idx: Vec<usize> = (0..freqs.len())
            .filter(|&k| freqs[k] >= self.lo && freqs[k] <= self.hi)
            .collect();
        if idx.is_empty() {
            return Err(Error::validation("band contains no frequency bins"));
        }
        Ok(idx)
    }
}

/// Scale and time shift applied to the positive arm, plus the band-integrated
/// common-mode power left after alignment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentParams {
    pub alpha: f64,
    pub tau: f64,
    pub residual: f64,
    /// The optimum sits on the edge of the searched delay window.
    pub at_boundary: bool,
}

impl AlignmentParams {
    pub fn new(alpha: f64, tau: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) || !tau.is_finite() {
            return Err(Error::validation(format!("invalid alignment alpha={alpha}, tau={tau}")));
        }
        Ok(Self {
            alpha,
            tau,
            residual: 0.0,
            at_boundary: false,
        })
    }

    pub fn identity() -> Self {
        Self {
            alpha: 1.0,
            tau: 0.0,
            residual: 0.0,
            at_boundary: false,
        }
    }
}

/// Per-bin rejection over a band.
#[derive(Debug, Clone, PartialEq)]
pub struct CmrrTrace {
    pub freqs: Vec<f64>,
    pub cmrr_db: Vec<f64>,
    pub rejection_db: Vec<f64>,
    /// Bin clamped at [`FLOOR_DB`].
    pub floor_mask: Vec<bool>,
    /// In-band bins dropped because the denominator vanished.
    pub excluded_bins: usize,
}

impl CmrrTrace {
    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// Minimum rejection over bins that were not clamped; `None` when every
    /// bin sits on the floor.
    pub fn min_unclamped_rejection(&self) -> Option<f64> {
        self.rejection_db
            .iter()
            .zip(&self.floor_mask)
            .filter(|(_, &clamped)| !clamped)
            .map(|(&r, _)| r)
            .reduce(f64::min)
    }
}

fn check_pair(vp: &Spectrum, vn: &Spectrum) -> Result<()> {
    if !vp.same_grid(vn) {
        return Err(Error::validation(format!(
            "grid mismatch: Vp has {} bins at df={:e} Hz, Vn has {} bins at df={:e} Hz",
            vp.len(),
            vp.df(),
            vn.len(),
            vn.df()
        )));
    }
    Ok(())
}

fn shifted(p: Complex64, alpha: f64, f: f64, tau: f64) -> Complex64 {
    p * Complex64::from_polar(alpha, -2.0 * PI * f * tau)
}

/// Evaluates the rejection ratio bin by bin over `band` for fixed alignment.
pub fn cmrr_spectrum(vp: &Spectrum, vn: &Spectrum, params: &AlignmentParams, band: &Band) -> Result<CmrrTrace> {
    check_pair(vp, vn)?;
    let idx = band.bins(vp)?;
    let terms: Vec<(f64, Complex64, Complex64)> = idx
        .iter()
        .map(|&k| {
            let f = vp.freq(k);
            let a = shifted(vp.bins()[k], params.alpha, f, params.tau);
            let b = vn.bins()[k];
            (f, a - b, a + b)
        })
        .collect();
    let den_max = terms.iter().map(|t| t.2.norm()).fold(0.0, f64::max);
    let guard = DEN_GUARD * den_max;
    let floor_ratio = 10f64.powf(FLOOR_DB / 20.0);

    let mut trace = CmrrTrace {
        freqs: Vec::with_capacity(terms.len()),
        cmrr_db: Vec::with_capacity(terms.len()),
        rejection_db: Vec::with_capacity(terms.len()),
        floor_mask: Vec::with_capacity(terms.len()),
        excluded_bins: 0,
    };
    for (f, num, den) in terms {
        let d = den.norm();
        if den_max == 0.0 || d < guard {
            trace.excluded_bins += 1;
            continue;
        }
        let ratio = num.norm() / d;
        let (db, clamped) = if ratio < floor_ratio {
            (FLOOR_DB, true)
        } else {
            (20.0 * ratio.log10(), false)
        };
        trace.freqs.push(f);
        trace.cmrr_db.push(db);
        trace.rejection_db.push(-db);
        trace.floor_mask.push(clamped);
    }
    Ok(trace)
}

/// Band data for the alignment search.
struct Objective {
    freqs: Vec<f64>,
    vp: Vec<Complex64>,
    vn: Vec<Complex64>,
    /// conj(Vp) Vn
    cross: Vec<Complex64>,
    power_p: f64,
}

impl Objective {
    fn new(vp: &Spectrum, vn: &Spectrum, idx: &[usize]) -> Result<Self> {
        let freqs: Vec<f64> = idx.iter().map(|&k| vp.freq(k)).collect();
        let p: Vec<Complex64> = idx.iter().map(|&k| vp.bins()[k]).collect();
        let n: Vec<Complex64> = idx.iter().map(|&k| vn.bins()[k]).collect();
        let power_p: f64 = p.iter().map(|z| z.norm_sqr()).sum();
        if power_p == 0.0 {
            return Err(Error::validation("positive-arm spectrum has no power in the band"));
        }
        let cross = p.iter().zip(&n).map(|(a, b)| a.conj() * b).collect();
        Ok(Self {
            freqs,
            vp: p,
            vn: n,
            cross,
            power_p,
        })
    }

    /// Correlation `Re sum conj(Vp) Vn e^{j w tau}` and its first two
    /// derivatives in `tau`.
    fn correlation(&self, tau: f64) -> (f64, f64, f64) {
        let mut c = 0.0;
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        for (&f, &x) in self.freqs.iter().zip(&self.cross) {
            let w = 2.0 * PI * f;
            let z = x * Complex64::from_polar(1.0, w * tau);
            c += z.re;
            d1 -= w * z.im;
            d2 -= w * w * z.re;
        }
        (c, d1, d2)
    }

    fn alpha(&self, tau: f64) -> f64 {
        (self.correlation(tau).0 / self.power_p).max(ALPHA_MIN)
    }

    /// Residual common-mode power at the closed-form scale for `tau`.
    fn cost(&self, tau: f64) -> (f64, f64) {
        let alpha = self.alpha(tau);
        let j = self
            .freqs
            .iter()
            .zip(self.vp.iter().zip(&self.vn))
            .map(|(&f, (&p, &n))| (shifted(p, alpha, f, tau) - n).norm_sqr())
            .sum();
        (j, alpha)
    }
}

/// Delay (seconds) at the peak of the band-limited time-domain
/// cross-correlation of the two arms, restricted to `|lag| <= window`.
fn xcorr_peak(vp: &Spectrum, vn: &Spectrum, idx: &[usize], window: f64) -> Result<Option<f64>> {
    let mut cross = vec![Complex64::new(0.0, 0.0); vp.len()];
    for &k in idx {
        cross[k] = vp.bins()[k].conj() * vn.bins()[k];
    }
    let spec = vp.with_bins(cross)?;
    let dt = vp.dt();
    let n = vp.record_len();
    let lags: Vec<f64> = match vp.sidedness() {
        Sidedness::Single => inverse_transform::<RealWaveform>(&spec)?.into_samples(),
        Sidedness::Double => inverse_transform::<crate::signal::ComplexWaveform>(&spec)?
            .into_samples()
            .iter()
            .map(|z| z.re)
            .collect(),
    };
    let mut best: Option<(f64, f64)> = None;
    for (m, &c) in lags.iter().enumerate() {
        let lag = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 } * dt;
        if lag.abs() > window {
            continue;
        }
        match best {
            Some((_, bc)) if c <= bc => {}
            _ => best = Some((lag, c)),
        }
    }
    Ok(best.map(|(lag, _)| lag))
}

/// Finds the scale and delay of the positive arm that minimize the
/// band-integrated residual `sum |alpha e^{-j w tau} Vp - Vn|^2`.
///
/// For fixed `tau` the optimal scale is closed form. The delay is searched on
/// a grid of step `1/(8 f_hi)` over `[-tau_window, tau_window]` (plus the
/// cross-correlation peak), refined by golden section to [`TAU_TOL`] and
/// polished with Newton steps on the correlation derivative.
pub fn optimize_alignment(vp: &Spectrum, vn: &Spectrum, band: &Band, tau_window: f64) -> Result<AlignmentParams> {
    check_pair(vp, vn)?;
    if !(tau_window.is_finite() && tau_window > 0.0) {
        return Err(Error::validation(format!("delay window must be positive, got {tau_window:e}")));
    }
    let idx = band.bins(vp)?;
    let obj = Objective::new(vp, vn, &idx)?;
    let f_hi = obj.freqs.iter().fold(0.0f64, |a, f| a.max(f.abs()));
    let step = if f_hi > 0.0 { 1.0 / (8.0 * f_hi) } else { tau_window };

    let n_steps = (tau_window / step).ceil() as i64;
    let mut grid: Vec<f64> = (-n_steps..=n_steps)
        .map(|i| (i as f64 * step).clamp(-tau_window, tau_window))
        .collect();
    if let Some(seed) = xcorr_peak(vp, vn, &idx, tau_window)? {
        grid.push(seed);
    }
    let costs: Vec<f64> = grid.par_iter().map(|&t| obj.cost(t).0).collect();
    let (mut best_tau, mut best_cost) = (grid[0], costs[0]);
    for (&t, &c) in grid.iter().zip(&costs).skip(1) {
        if c < best_cost || (c == best_cost && t < best_tau) {
            best_tau = t;
            best_cost = c;
        }
    }

    // golden section on the bracket around the best grid point
    let mut a = (best_tau - step).max(-tau_window);
    let mut b = (best_tau + step).min(tau_window);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = obj.cost(x1).0;
    let mut f2 = obj.cost(x2).0;
    while b - a > TAU_TOL {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = obj.cost(x1).0;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = obj.cost(x2).0;
        }
    }
    let mut tau = if f1 <= f2 { x1 } else { x2 };
    let mut cost = f1.min(f2);
    if best_cost < cost {
        tau = best_tau;
        cost = best_cost;
    }

    // Newton polish on d/dtau of the correlation
    let mut t = tau;
    for _ in 0..20 {
        let (_, d1, d2) = obj.correlation(t);
        if d2 >= 0.0 {
            break;
        }
        let delta = -d1 / d2;
        if !delta.is_finite() || delta.abs() > step {
            break;
        }
        t = (t + delta).clamp(-tau_window, tau_window);
        if delta.abs() < 1e-30 {
            break;
        }
    }
    let (newton_cost, _) = obj.cost(t);
    if newton_cost <= cost {
        tau = t;
        cost = newton_cost;
    }

    let (residual, alpha) = obj.cost(tau);
    debug_assert!(residual <= cost || residual.is_nan());
    let edge = step * 1e-3;
    Ok(AlignmentParams {
        alpha,
        tau,
        residual,
        at_boundary: tau_window - tau.abs() <= edge,
    })
}

/// Band summary of a CMRR evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct CmrrSummary {
    /// Minimum rejection over unclamped bins, or the floor value when every
    /// bin was clamped.
    pub min_rejection_db: f64,
    pub median_rejection_db: f64,
    /// Every in-band bin sat at the numerical floor.
    pub floor_limited: bool,
    pub floor_bins: usize,
    pub excluded_bins: usize,
    pub n_bins: usize,
    /// DC photocurrent ratio `sum Vp / sum Vn`.
    pub photocurrent_ratio: f64,
    /// Scale that balances the DC photocurrents, `sum Vn / sum Vp`, directly
    /// comparable with the optimized `alpha`.
    pub alpha_dc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CmrrReport {
    pub params: AlignmentParams,
    pub trace: CmrrTrace,
    pub summary: CmrrSummary,
    pub band: Band,
}

/// Full pipeline on time records: transform, align, evaluate and summarize.
/// `band` defaults to [`Band::default_for`].
pub fn cmrr_report(vp_t: &RealWaveform, vn_t: &RealWaveform, band: Option<Band>, tau_window: f64) -> Result<CmrrReport> {
    if vp_t.len() != vn_t.len() || (vp_t.dt() - vn_t.dt()).abs() > 1e-12 * vp_t.dt() {
        return Err(Error::validation(format!(
            "grid mismatch: Vp has {} samples at dt={:e} s, Vn has {} samples at dt={:e} s",
            vp_t.len(),
            vp_t.dt(),
            vn_t.len(),
            vn_t.dt()
        )));
    }
    let vp = forward_transform(vp_t);
    let vn = forward_transform(vn_t);
    let band = band.unwrap_or_else(|| Band::default_for(&vp));
    let params = optimize_alignment(&vp, &vn, &band, tau_window)?;
    let trace = cmrr_spectrum(&vp, &vn, &params, &band)?;
    if trace.is_empty() {
        return Err(Error::validation("every in-band bin was excluded by the denominator guard"));
    }

    let floor_bins = trace.floor_mask.iter().filter(|&&m| m).count();
    let min_unclamped = trace.min_unclamped_rejection();
    let mut sorted = trace.rejection_db.clone();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    };
    let sum_p: f64 = vp_t.samples().iter().sum();
    let sum_n: f64 = vn_t.samples().iter().sum();
    let summary = CmrrSummary {
        min_rejection_db: min_unclamped.unwrap_or(-FLOOR_DB),
        median_rejection_db: median,
        floor_limited: min_unclamped.is_none(),
        floor_bins,
        excluded_bins: trace.excluded_bins,
        n_bins: trace.len(),
        photocurrent_ratio: sum_p / sum_n,
        alpha_dc: sum_n / sum_p,
    };
    Ok(CmrrReport {
        params,
        trace,
        summary,
        band,
    })
}

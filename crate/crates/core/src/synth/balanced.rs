//! Balanced-photodiode response pairs with controlled arm mismatch.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::{forward_transform, inverse_transform, RealWaveform};

/// Mismatch of the negative arm relative to the positive arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MismatchSpec {
    /// Relative amplitude of the negative arm.
    pub gain: f64,
    /// Extra delay of the negative arm in seconds.
    pub delay: f64,
    /// Peak relative magnitude ripple, `0 <= ripple_amp < 1`.
    pub ripple_amp: f64,
    /// Period of the ripple along the frequency axis, in hertz. The negative
    /// arm is scaled by `1 + ripple_amp sin(2 pi f / ripple_period_hz)`.
    pub ripple_period_hz: f64,
}

impl MismatchSpec {
    pub fn matched() -> Self {
        Self {
            gain: 1.0,
            delay: 0.0,
            ripple_amp: 0.0,
            ripple_period_hz: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gain.is_finite() && self.gain > 0.0) {
            return Err(Error::validation(format!("arm gain must be positive, got {}", self.gain)));
        }
        if !self.delay.is_finite() {
            return Err(Error::validation("arm delay is not finite"));
        }
        if !(0.0..1.0).contains(&self.ripple_amp) {
            return Err(Error::validation(format!("ripple amplitude {} outside [0, 1)", self.ripple_amp)));
        }
        if self.ripple_amp > 0.0 && !(self.ripple_period_hz.is_finite() && self.ripple_period_hz > 0.0) {
            return Err(Error::validation("ripple period must be positive when ripple is enabled"));
        }
        Ok(())
    }

    /// Relative magnitude factor of the negative arm at frequency `f`.
    pub fn ripple(&self, f: f64) -> f64 {
        if self.ripple_amp == 0.0 {
            1.0
        } else {
            1.0 + self.ripple_amp * (2.0 * PI * f / self.ripple_period_hz).sin()
        }
    }
}

/// Critically damped two-pole photodiode impulse response,
/// `h(t) = t / tc^2 exp(-t / tc)`, with `tc` set by the 3 dB bandwidth.
/// Sampled at `dt` for `n` samples and scaled to unit area.
pub fn photodiode_response(bandwidth_3db_hz: f64, dt: f64, n: usize) -> Result<RealWaveform> {
    if !(bandwidth_3db_hz.is_finite() && bandwidth_3db_hz > 0.0) {
        return Err(Error::validation("photodiode bandwidth must be positive"));
    }
    // |H|^2 = 1 / (1 + (w tc)^2)^2 = 1/2
    let tc = (2f64.sqrt() - 1.0).sqrt() / (2.0 * PI * bandwidth_3db_hz);
    let mut h: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 * dt;
            t / (tc * tc) * (-t / tc).exp()
        })
        .collect();
    let area: f64 = h.iter().sum::<f64>() * dt;
    if area > 0.0 {
        h.iter_mut().for_each(|x| *x /= area);
    }
    RealWaveform::new(h, dt, 0.0)
}

/// Unit-area impulses (height `1/dt`) at the given sample indices.
pub fn impulse_train(n: usize, dt: f64, at: &[usize]) -> Result<RealWaveform> {
    let mut x = vec![0.0; n];
    for &i in at {
        if i >= n {
            return Err(Error::validation(format!("impulse index {i} beyond record of {n}")));
        }
        x[i] += 1.0 / dt;
    }
    RealWaveform::new(x, dt, 0.0)
}

/// Gaussian optical pulse of the given FWHM centred at `center` seconds.
pub fn gaussian_pulse(n: usize, dt: f64, center: f64, fwhm: f64) -> Result<RealWaveform> {
    let sigma = fwhm / (2.0 * (2.0 * 2f64.ln()).sqrt());
    let x = (0..n)
        .map(|i| {
            let t = i as f64 * dt - center;
            (-0.5 * (t / sigma).powi(2)).exp()
        })
        .collect();
    RealWaveform::new(x, dt, 0.0)
}

/// Responses of the positive and negative arms to a common stimulus.
///
/// `Vp = h (*) stimulus` and `Vn = gain * delayed(h) (*) stimulus` with the
/// optional magnitude ripple applied to the negative arm in the frequency
/// domain. Convolutions are circular over the stimulus length and scaled by
/// `dt`, so `h` is an impulse response in 1/s. `h` is zero-padded to the
/// stimulus length.
pub fn synth_balanced_pair(
    stimulus: &RealWaveform,
    h: &RealWaveform,
    mismatch: &MismatchSpec,
) -> Result<(RealWaveform, RealWaveform)> {
    mismatch.validate()?;
    let dt = stimulus.dt();
    if (h.dt() - dt).abs() > 1e-12 * dt {
        return Err(Error::validation(format!(
            "stimulus dt {dt:e} s and impulse-response dt {:e} s differ",
            h.dt()
        )));
    }
    let n = stimulus.len();
    if h.len() > n {
        return Err(Error::validation(format!(
            "impulse response ({} samples) longer than stimulus ({n})",
            h.len()
        )));
    }
    let mut padded = h.samples().to_vec();
    padded.resize(n, 0.0);
    let h_spec = forward_transform(&RealWaveform::new(padded, dt, 0.0)?);
    let s_spec = forward_transform(stimulus);

    let mut vp = Vec::with_capacity(s_spec.len());
    let mut vn = Vec::with_capacity(s_spec.len());
    for k in 0..s_spec.len() {
        let f = s_spec.freq(k);
        let common = h_spec.bins()[k] * s_spec.bins()[k] * dt;
        let arm = Complex64::from_polar(mismatch.gain * mismatch.ripple(f), -2.0 * PI * f * mismatch.delay);
        vp.push(common);
        vn.push(common * arm);
    }
    let vp: RealWaveform = inverse_transform(&s_spec.with_bins(vp)?)?;
    let vn: RealWaveform = inverse_transform(&s_spec.with_bins(vn)?)?;
    Ok((vp, vn))
}

//! Sampled-signal types, the discrete Fourier transform pair and
//! frequency-domain fractional delay.
//!
//! Transform convention: the forward transform is the unnormalized DFT with a
//! negative exponent, `X[k] = sum_n x[n] exp(-j 2 pi k n / N)`; the inverse
//! divides by `N`. Bin spacing is `df = 1 / (N dt)`. Real records produce
//! single-sided spectra holding bins `0..=N/2`; complex records produce the
//! full double-sided spectrum in FFT order.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Which half of the frequency axis a [`Spectrum`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sidedness {
    /// Bins `0..=N/2` of a real record.
    Single,
    /// All `N` bins in FFT order (non-negative frequencies first).
    Double,
}

fn check_grid(len: usize, dt: f64, t0: f64) -> Result<()> {
    if len == 0 {
        return Err(Error::validation("record is empty"));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::validation(format!("sample interval must be positive, got {dt}")));
    }
    if !t0.is_finite() {
        return Err(Error::validation("time origin is not finite"));
    }
    Ok(())
}

/// Uniformly sampled real time record.
#[derive(Debug, Clone, PartialEq)]
pub struct RealWaveform {
    samples: Vec<f64>,
    dt: f64,
    t0: f64,
}

impl RealWaveform {
    pub fn new(samples: Vec<f64>, dt: f64, t0: f64) -> Result<Self> {
        check_grid(samples.len(), dt, t0)?;
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::validation(format!("sample {i} is not finite")));
        }
        Ok(Self { samples, dt, t0 })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Record duration `N dt`.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.dt
    }
}

/// Uniformly sampled complex baseband record.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexWaveform {
    samples: Vec<Complex64>,
    dt: f64,
    t0: f64,
}

impl ComplexWaveform {
    pub fn new(samples: Vec<Complex64>, dt: f64, t0: f64) -> Result<Self> {
        check_grid(samples.len(), dt, t0)?;
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::validation(format!("sample {i} is not finite")));
        }
        Ok(Self { samples, dt, t0 })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.dt
    }
}

/// Frequency-domain record produced by [`forward_transform`].
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    bins: Vec<Complex64>,
    df: f64,
    f0: f64,
    record_len: usize,
    sidedness: Sidedness,
    t0: f64,
}

impl Spectrum {
    /// Builds a spectrum directly. `record_len` is the length of the time
    /// record it describes; the bin count must agree with it and `sidedness`.
    pub fn new(
        bins: Vec<Complex64>,
        df: f64,
        f0: f64,
        record_len: usize,
        sidedness: Sidedness,
    ) -> Result<Self> {
        if !(df.is_finite() && df > 0.0) {
            return Err(Error::validation(format!("bin spacing must be positive, got {df}")));
        }
        if !f0.is_finite() {
            return Err(Error::validation("first-bin frequency is not finite"));
        }
        if record_len == 0 {
            return Err(Error::validation("record length must be at least 1"));
        }
        let expected = match sidedness {
            Sidedness::Single => record_len / 2 + 1,
            Sidedness::Double => record_len,
        };
        if bins.len() != expected {
            return Err(Error::validation(format!(
                "{sidedness:?}-sided spectrum of a {record_len}-sample record needs {expected} bins, got {}",
                bins.len()
            )));
        }
        if let Some(i) = bins.iter().position(|x| !x.is_finite()) {
            return Err(Error::validation(format!("bin {i} is not finite")));
        }
        Ok(Self {
            bins,
            df,
            f0,
            record_len,
            sidedness,
            t0: 0.0,
        })
    }

    /// Same grid, new bin values. Non-finite values are allowed here so that
    /// masked analysis results can carry NaN markers.
    pub fn with_bins(&self, bins: Vec<Complex64>) -> Result<Self> {
        if bins.len() != self.bins.len() {
            return Err(Error::validation(format!(
                "expected {} bins, got {}",
                self.bins.len(),
                bins.len()
            )));
        }
        Ok(Self { bins, ..self.clone() })
    }

    pub fn bins(&self) -> &[Complex64] {
        &self.bins
    }

    pub fn df(&self) -> f64 {
        self.df
    }

    pub fn f0(&self) -> f64 {
        self.f0
    }

    /// Length of the time record this spectrum describes.
    pub fn record_len(&self) -> usize {
        self.record_len
    }

    pub fn sidedness(&self) -> Sidedness {
        self.sidedness
    }

    /// Time origin of the originating record.
    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Sample interval of the originating record, `1 / (N df)`.
    pub fn dt(&self) -> f64 {
        1.0 / (self.record_len as f64 * self.df)
    }

    /// Frequency of bin `k` in hertz. Double-sided spectra map the upper half
    /// of the bins onto negative frequencies.
    pub fn freq(&self, k: usize) -> f64 {
        let signed = match self.sidedness {
            Sidedness::Single => k as f64,
            Sidedness::Double => {
                if k < self.record_len.div_ceil(2) {
                    k as f64
                } else {
                    k as f64 - self.record_len as f64
                }
            }
        };
        self.f0 + signed * self.df
    }

    pub fn freqs(&self) -> Vec<f64> {
        (0..self.bins.len()).map(|k| self.freq(k)).collect()
    }

    /// True when both spectra describe the same frequency grid.
    pub fn same_grid(&self, other: &Spectrum) -> bool {
        self.record_len == other.record_len
            && self.sidedness == other.sidedness
            && self.bins.len() == other.bins.len()
            && rel_eq(self.df, other.df)
            && rel_eq(self.f0, other.f0)
    }

    /// Time-domain energy `sum |x|^2 dt` of the originating record, evaluated
    /// from the bins.
    pub fn energy(&self) -> f64 {
        let n = self.record_len;
        let weighted: f64 = match self.sidedness {
            Sidedness::Double => self.bins.iter().map(|b| b.norm_sqr()).sum(),
            Sidedness::Single => self
                .bins
                .iter()
                .enumerate()
                .map(|(k, b)| {
                    let edge = k == 0 || (n.is_multiple_of(2) && k == n / 2);
                    if edge {
                        b.norm_sqr()
                    } else {
                        2.0 * b.norm_sqr()
                    }
                })
                .sum(),
        };
        weighted * self.dt() / n as f64
    }
}

fn rel_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// A sampled record that can be carried through the transform pair.
pub trait Waveform: Sized {
    fn dt(&self) -> f64;
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn to_spectrum(&self) -> Spectrum;
    fn from_spectrum(spectrum: &Spectrum) -> Result<Self>;
}

fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(buf.len())
    } else {
        planner.plan_fft_forward(buf.len())
    };
    fft.process(buf);
}

impl Waveform for RealWaveform {
    fn dt(&self) -> f64 {
        self.dt
    }

    fn len(&self) -> usize {
        self.samples.len()
    }

    fn to_spectrum(&self) -> Spectrum {
        let n = self.samples.len();
        let mut buf: Vec<Complex64> = self.samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        fft_in_place(&mut buf, false);
        buf.truncate(n / 2 + 1);
        Spectrum {
            bins: buf,
            df: 1.0 / (n as f64 * self.dt),
            f0: 0.0,
            record_len: n,
            sidedness: Sidedness::Single,
            t0: self.t0,
        }
    }

    fn from_spectrum(spectrum: &Spectrum) -> Result<Self> {
        if spectrum.sidedness != Sidedness::Single {
            return Err(Error::validation(
                "a real record needs a single-sided spectrum; got a double-sided one",
            ));
        }
        let n = spectrum.record_len;
        let mut full = vec![Complex64::new(0.0, 0.0); n];
        full[..spectrum.bins.len()].copy_from_slice(&spectrum.bins);
        for k in 1..n.div_ceil(2) {
            full[n - k] = spectrum.bins[k].conj();
        }
        fft_in_place(&mut full, true);
        let scale = 1.0 / n as f64;
        let samples = full.iter().map(|c| c.re * scale).collect();
        RealWaveform::new(samples, spectrum.dt(), spectrum.t0)
    }
}

impl Waveform for ComplexWaveform {
    fn dt(&self) -> f64 {
        self.dt
    }

    fn len(&self) -> usize {
        self.samples.len()
    }

    fn to_spectrum(&self) -> Spectrum {
        let n = self.samples.len();
        let mut buf = self.samples.clone();
        fft_in_place(&mut buf, false);
        Spectrum {
            bins: buf,
            df: 1.0 / (n as f64 * self.dt),
            f0: 0.0,
            record_len: n,
            sidedness: Sidedness::Double,
            t0: self.t0,
        }
    }

    fn from_spectrum(spectrum: &Spectrum) -> Result<Self> {
        if spectrum.sidedness != Sidedness::Double {
            return Err(Error::validation(
                "a complex record needs a double-sided spectrum; got a single-sided one",
            ));
        }
        let mut buf = spectrum.bins.clone();
        fft_in_place(&mut buf, true);
        let scale = 1.0 / spectrum.record_len as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        ComplexWaveform::new(buf, spectrum.dt(), spectrum.t0)
    }
}

/// Unnormalized forward DFT of a real or complex record.
pub fn forward_transform<W: Waveform>(w: &W) -> Spectrum {
    w.to_spectrum()
}

/// Inverse DFT (divides by `N`). The spectrum's sidedness must match the
/// requested record type.
pub fn inverse_transform<W: Waveform>(s: &Spectrum) -> Result<W> {
    W::from_spectrum(s)
}

/// Delays a record by `tau` seconds by multiplying its spectrum with
/// `exp(-j 2 pi f tau)`.
///
/// The record is treated as one period of a periodic signal, so content
/// shifted past the end wraps to the start. `|tau|` must stay below a quarter
/// of the record duration. For even-length real records only the real part
/// of the phase-shifted Nyquist bin survives the inverse transform.
pub fn fractional_delay<W: Waveform>(w: &W, tau: f64) -> Result<W> {
    let duration = w.len() as f64 * w.dt();
    if !tau.is_finite() || tau.abs() >= duration / 4.0 {
        return Err(Error::validation(format!(
            "delay {tau:e} s outside guard range +/-{:e} s (quarter record)",
            duration / 4.0
        )));
    }
    let spectrum = w.to_spectrum();
    if tau == 0.0 {
        return W::from_spectrum(&spectrum);
    }
    let shifted = apply_delay(&spectrum, tau);
    W::from_spectrum(&shifted)
}

/// Multiplies every bin by `exp(-j 2 pi f tau)`.
pub fn apply_delay(spectrum: &Spectrum, tau: f64) -> Spectrum {
    let bins = spectrum
        .bins
        .iter()
        .enumerate()
        .map(|(k, &b)| b * Complex64::from_polar(1.0, -2.0 * PI * spectrum.freq(k) * tau))
        .collect();
    Spectrum {
        bins,
        ..spectrum.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_dft(x: &[f64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(i, &v)| v * Complex64::from_polar(1.0, -2.0 * PI * (k * i) as f64 / n as f64))
                    .sum()
            })
            .collect()
    }

    #[test]
    fn impulse_is_flat() {
        let w = RealWaveform::new(vec![1.0, 0.0, 0.0, 0.0], 1.0, 0.0).unwrap();
        let s = forward_transform(&w);
        assert_eq!(s.df(), 0.25);
        assert_eq!(s.len(), 3);
        for b in s.bins() {
            assert_eq!(*b, Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn dc_only() {
        let w = RealWaveform::new(vec![1.0; 4], 1.0, 0.0).unwrap();
        let s = forward_transform(&w);
        assert_eq!(s.bins()[0], Complex64::new(4.0, 0.0));
        assert!(s.bins()[1..].iter().all(|b| b.norm() == 0.0));
    }

    #[test]
    fn cosine_bin_one_matches_brute_force() {
        let x: Vec<f64> = (0..8).map(|n| (2.0 * PI * n as f64 / 8.0).cos()).collect();
        let oracle = brute_dft(&x);
        assert!((oracle[1] - Complex64::new(4.0, 0.0)).norm() < 1e-12);
        let s = forward_transform(&RealWaveform::new(x, 1.0, 0.0).unwrap());
        for (k, b) in s.bins().iter().enumerate() {
            assert!((b - oracle[k]).norm() < 1e-12, "bin {k}");
        }
    }

    #[test]
    fn inverse_examples() {
        let zero = Spectrum::new(vec![Complex64::new(0.0, 0.0); 3], 0.25, 0.0, 4, Sidedness::Single).unwrap();
        let w: RealWaveform = inverse_transform(&zero).unwrap();
        assert!(w.samples().iter().all(|&x| x == 0.0));

        let flat = Spectrum::new(vec![Complex64::new(1.0, 0.0); 3], 0.25, 0.0, 4, Sidedness::Single).unwrap();
        let w: RealWaveform = inverse_transform(&flat).unwrap();
        assert_eq!(w.samples(), &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(w.dt(), 1.0);
    }

    #[test]
    fn sidedness_mismatch_rejected() {
        let w = ComplexWaveform::new(vec![Complex64::new(1.0, 0.0); 4], 1.0, 0.0).unwrap();
        let s = forward_transform(&w);
        assert!(matches!(inverse_transform::<RealWaveform>(&s), Err(Error::Validation(_))));
        let r = RealWaveform::new(vec![1.0; 4], 1.0, 0.0).unwrap();
        assert!(inverse_transform::<ComplexWaveform>(&forward_transform(&r)).is_err());
    }

    #[test]
    fn non_finite_rejected() {
        assert!(RealWaveform::new(vec![1.0, f64::NAN], 1.0, 0.0).is_err());
        assert!(RealWaveform::new(vec![], 1.0, 0.0).is_err());
        assert!(RealWaveform::new(vec![1.0], 0.0, 0.0).is_err());
    }

    #[test]
    fn delay_zero_is_identity() {
        let x: Vec<f64> = (0..32).map(|n| ((n * 7919) % 13) as f64 - 6.0).collect();
        let w = RealWaveform::new(x, 1e-12, 0.0).unwrap();
        let d = fractional_delay(&w, 0.0).unwrap();
        assert_eq!(forward_transform(&w).bins(), apply_delay(&forward_transform(&w), 0.0).bins());
        for (a, b) in w.samples().iter().zip(d.samples()) {
            assert!((a - b).abs() < 1e-15 * 6.0);
        }
    }

    #[test]
    fn one_sample_delay_is_roll() {
        let x: Vec<f64> = (0..16).map(|n| ((n * 31) % 11) as f64).collect();
        let mut rolled = x.clone();
        rolled.rotate_right(1);
        let w = RealWaveform::new(x, 2e-12, 0.0).unwrap();
        let d = fractional_delay(&w, 2e-12).unwrap();
        for (a, b) in d.samples().iter().zip(&rolled) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }

        let c: Vec<Complex64> = (0..15).map(|n| Complex64::new(n as f64, -(n as f64) * 0.5)).collect();
        let mut rolled = c.clone();
        rolled.rotate_right(1);
        let d = fractional_delay(&ComplexWaveform::new(c, 1.0, 0.0).unwrap(), 1.0).unwrap();
        for (a, b) in d.samples().iter().zip(&rolled) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn quarter_period_delay_of_tone() {
        // 1 GHz tone, 10 full cycles in the record
        let dt = 10e-12;
        let n = 1000;
        let x: Vec<f64> = (0..n).map(|i| (2.0 * PI * 1e9 * i as f64 * dt).cos()).collect();
        let w = RealWaveform::new(x, dt, 0.0).unwrap();
        let d = fractional_delay(&w, 250e-12).unwrap();
        let s = forward_transform(&d);
        let k = 10;
        let phase = s.bins()[k].arg();
        assert!((phase + PI / 2.0).abs() < 1e-9, "phase {phase}");
    }

    #[test]
    fn delay_guard() {
        let w = RealWaveform::new(vec![0.0; 8], 1.0, 0.0).unwrap();
        assert!(fractional_delay(&w, 2.0).is_err());
        assert!(fractional_delay(&w, -1.99).is_ok());
    }

    #[test]
    fn double_sided_frequencies() {
        let w = ComplexWaveform::new(vec![Complex64::new(0.0, 0.0); 5], 0.2, 0.0).unwrap();
        let s = forward_transform(&w);
        assert_eq!(s.freqs(), vec![0.0, 1.0, 2.0, -2.0, -1.0]);
    }
}

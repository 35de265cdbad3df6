//! Seeded additive white Gaussian noise.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::modulation::SymbolFrame;
use crate::signal::ComplexWaveform;

/// Mixes a campaign seed and a record index into an independent per-record
/// seed (splitmix64 finalizer).
pub fn record_seed(campaign_seed: u64, index: u64) -> u64 {
    let mut z = campaign_seed ^ index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic RNG for a seed.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Adds circular complex Gaussian noise in place. Per-sample noise variance
/// is the measured mean signal power divided by the linear SNR. An SNR of
/// `+inf` leaves the samples untouched.
pub fn awgn_in_place(samples: &mut [Complex64], snr_db: f64, seed: u64) -> Result<()> {
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::validation(format!("SNR {snr_db} dB is not usable")));
    }
    if snr_db == f64::INFINITY || samples.is_empty() {
        return Ok(());
    }
    let power = samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / samples.len() as f64;
    let sigma = (power / 10f64.powf(snr_db / 10.0) / 2.0).sqrt();
    let mut rng = seeded_rng(seed);
    for z in samples.iter_mut() {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        *z += Complex64::new(re, im) * sigma;
    }
    Ok(())
}

/// Records that can carry additive complex noise.
pub trait Noisy: Sized {
    fn add_awgn(&self, snr_db: f64, seed: u64) -> Result<Self>;
}

impl Noisy for SymbolFrame {
    fn add_awgn(&self, snr_db: f64, seed: u64) -> Result<Self> {
        let mut s = self.symbols().to_vec();
        awgn_in_place(&mut s, snr_db, seed)?;
        self.with_symbols(s)
    }
}

impl Noisy for ComplexWaveform {
    fn add_awgn(&self, snr_db: f64, seed: u64) -> Result<Self> {
        let mut s = self.samples().to_vec();
        awgn_in_place(&mut s, snr_db, seed)?;
        ComplexWaveform::new(s, self.dt(), self.t0())
    }
}

/// Adds AWGN at `snr_db` (relative to measured signal power) with a fixed
/// seed. `f64::INFINITY` means no noise.
pub fn add_awgn<T: Noisy>(record: &T, snr_db: f64, seed: u64) -> Result<T> {
    record.add_awgn(snr_db, seed)
}

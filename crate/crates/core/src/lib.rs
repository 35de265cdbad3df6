//! Waveform metrology for coherent optical links.
//!
//! * [`signal`]: sampled records, the DFT pair and fractional delay.
//! * [`synth`]: PRBS patterns, Gray-mapped QAM, RRC shaping, AWGN and
//!   balanced-photodiode response pairs.
//! * [`cmrr`]: common-mode rejection with optimized arm alignment.
//! * [`acquisition`]: equivalent-time interleaving and I/Q trigger-jitter
//!   compensation.
//! * [`metrics`]: EVM, SNR and BER from EVM, hard decisions and error counting.
//! * [`wavesplit`]: forward/reverse travelling-wave separation.

pub mod acquisition;
pub mod cmrr;
pub mod error;
pub mod metrics;
pub mod modulation;
pub mod rational;
pub mod signal;
pub mod synth;
pub mod wavesplit;

pub use error::{Error, Result};
pub use modulation::{map_symbols, Bit, Modulation, SymbolFrame};
pub use rational::ExactRate;
pub use signal::{
    forward_transform, fractional_delay, inverse_transform, ComplexWaveform, RealWaveform, Sidedness, Spectrum,
    Waveform,
};

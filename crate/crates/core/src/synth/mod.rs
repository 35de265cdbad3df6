//! Ground-truth signal synthesis: PRBS patterns, Gray-mapped symbols, RRC
//! pulse shaping, AWGN and balanced-photodiode response pairs.

mod balanced;
mod noise;
mod prbs;
mod pulse;

pub use balanced::{gaussian_pulse, impulse_train, photodiode_response, synth_balanced_pair, MismatchSpec};
pub use noise::{add_awgn, awgn_in_place, record_seed, seeded_rng, Noisy};
pub use prbs::{prbs_generate, Lfsr, PrbsSpec};
pub use pulse::{matched_filter, pulse_shape, rrc_impulse, PeriodicShaper, PulseConfig};

pub use crate::modulation::map_symbols;

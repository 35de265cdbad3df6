use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Subcommand, ValueEnum};
use serde::{Serialize, Serializer};
use wavemetro::metrics::{EvmMode, EvmNormalization};
use wavemetro::{ExactRate, Modulation};

/// Exact rate flag: an integer or `num/den`, never a float.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rate(pub ExactRate);

impl FromStr for Rate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.parse().map(Rate).map_err(|e: wavemetro::Error| e.to_string())
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl Serialize for Rate {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mod(pub Modulation);

impl FromStr for Mod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.parse().map(Mod).map_err(|e: wavemetro::Error| e.to_string())
    }
}

impl Serialize for Mod {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.name().to_ascii_lowercase())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormArg {
    Average,
    Peak,
}

impl From<NormArg> for EvmNormalization {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Average => EvmNormalization::Average,
            NormArg::Peak => EvmNormalization::Peak,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvmModeArg {
    DataAided,
    DecisionDirected,
}

impl From<EvmModeArg> for EvmMode {
    fn from(m: EvmModeArg) -> Self {
        match m {
            EvmModeArg::DataAided => EvmMode::DataAided,
            EvmModeArg::DecisionDirected => EvmMode::DecisionDirected,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Strict,
    Average,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Generate synthetic test records
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Write a PRBS bit pattern
    Prbs(PrbsArgs),
    /// Align a balanced pair and compute its rejection spectrum
    Cmrr(CmrrArgs),
    /// Plan or perform equivalent-time interleaving
    Interleave(InterleaveArgs),
    /// Estimate and remove record timing jitter from a reference tone
    JitterComp(JitterCompArgs),
    /// Error vector magnitude of received symbols
    Evm(EvmArgs),
    /// Predict BER from SNR or EVM
    BerPredict(BerPredictArgs),
    /// Count bit errors against reference symbols
    BerCount(BerCountArgs),
    /// Monte-Carlo BER sweep over AWGN
    BerSweep(BerSweepArgs),
    /// Separate forward and reverse waves from multi-position spectra
    Wavesplit(WavesplitArgs),
    /// Re-execute a run from its manifest and verify the outputs
    Replay(ReplayArgs),
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthCommand {
    /// PRBS-mapped constellation symbols, optionally pulse shaped and noisy
    Qam(SynthQamArgs),
    /// Balanced photodiode pair with controlled mismatch
    Pair(SynthPairArgs),
    /// Jittered signal and reference record ensembles
    Jitter(SynthJitterArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SynthQamArgs {
    #[arg(long = "mod")]
    pub modulation: Mod,
    /// PRBS degree of the bit source
    #[arg(long, default_value_t = 7)]
    pub prbs: u32,
    /// Symbol count; defaults to one full PRBS period
    #[arg(long)]
    pub symbols: Option<usize>,
    /// Symbol rate in Hz
    #[arg(long)]
    pub fsym: Rate,
    /// Samples per symbol of the shaped waveform (integer or num/den)
    #[arg(long)]
    pub sps: Option<Rate>,
    #[arg(long, default_value_t = 0.35)]
    pub rolloff: f64,
    /// Pulse span in symbols
    #[arg(long, default_value_t = 16)]
    pub span: u32,
    /// Add complex AWGN at this SNR
    #[arg(long, requires = "seed", allow_hyphen_values = true)]
    pub snr_db: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthPairArgs {
    /// Sample rate in Hz
    #[arg(long)]
    pub fs: Rate,
    #[arg(long, default_value_t = 2048)]
    pub samples: usize,
    /// Photodiode 3 dB bandwidth in Hz
    #[arg(long, default_value_t = 60e9)]
    pub bandwidth_hz: f64,
    /// Photodiode impulse-response length in samples
    #[arg(long, default_value_t = 400)]
    pub response_len: usize,
    /// Sample index of the optical impulse
    #[arg(long, default_value_t = 300)]
    pub impulse_at: usize,
    #[arg(long, default_value_t = 1.0)]
    pub gain: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub delay_s: f64,
    #[arg(long, default_value_t = 0.0)]
    pub ripple_amp: f64,
    /// Ripple period along the frequency axis
    #[arg(long, default_value_t = 10e9)]
    pub ripple_period_hz: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthJitterArgs {
    #[arg(long)]
    pub fs: Rate,
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    #[arg(long, default_value_t = 100)]
    pub records: usize,
    #[arg(long, default_value_t = 10e9)]
    pub f_signal_hz: f64,
    #[arg(long, default_value_t = 1e9)]
    pub f_ref_hz: f64,
    /// Record offsets are uniform in +/- this value
    #[arg(long, default_value_t = 1e-12)]
    pub jitter_s: f64,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct PrbsArgs {
    #[arg(long, default_value_t = 7)]
    pub degree: u32,
    /// Initial register state; defaults to all ones
    #[arg(long)]
    pub init: Option<u64>,
    /// Bit count; defaults to one period
    #[arg(long)]
    pub bits: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct CmrrArgs {
    #[arg(long)]
    pub vp: PathBuf,
    #[arg(long)]
    pub vn: PathBuf,
    #[arg(long, requires = "band_hi_hz")]
    pub band_lo_hz: Option<f64>,
    #[arg(long, requires = "band_lo_hz")]
    pub band_hi_hz: Option<f64>,
    /// Delay search half-width
    #[arg(long, default_value_t = 100e-12)]
    pub tau_window_s: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct InterleaveArgs {
    /// Scope sample rate in Hz
    #[arg(long)]
    pub fs: Rate,
    /// Symbol rate in Hz
    #[arg(long)]
    pub fsym: Rate,
    #[arg(long)]
    pub pattern_len: u64,
    /// Print the plan and stop
    #[arg(long, conflicts_with = "input")]
    pub plan_only: bool,
    /// Waveform acquired at the scope rate
    #[arg(long, required_unless_present = "plan_only")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "strict")]
    pub mode: ModeArg,
}

#[derive(Debug, Args, Serialize)]
pub struct JitterCompArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub signal: Vec<PathBuf>,
    #[arg(long, num_args = 1.., required = true)]
    pub reference: Vec<PathBuf>,
    #[arg(long)]
    pub f_ref_hz: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct EvmArgs {
    /// Received symbols
    #[arg(long)]
    pub rx: PathBuf,
    /// Reference symbols, needed for data-aided mode
    #[arg(long = "ref")]
    pub reference: Option<PathBuf>,
    /// Modulation, if the symbol file does not declare one
    #[arg(long = "mod")]
    pub modulation: Option<Mod>,
    #[arg(long, value_enum, default_value = "average")]
    pub norm: NormArg,
    #[arg(long, value_enum, default_value = "data-aided")]
    pub mode: EvmModeArg,
}

#[derive(Debug, Args, Serialize)]
pub struct BerPredictArgs {
    #[arg(long = "mod")]
    pub modulation: Mod,
    #[arg(long, allow_hyphen_values = true, required_unless_present = "evm", conflicts_with = "evm")]
    pub snr_db: Option<f64>,
    /// RMS EVM as a fraction (average normalization)
    #[arg(long)]
    pub evm: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct BerCountArgs {
    #[arg(long)]
    pub rx: PathBuf,
    /// Transmitted reference symbols
    #[arg(long)]
    pub tx: PathBuf,
    #[arg(long = "mod")]
    pub modulation: Option<Mod>,
}

#[derive(Debug, Args, Serialize)]
pub struct BerSweepArgs {
    #[arg(long = "mod")]
    pub modulation: Mod,
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub snr_db: Vec<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    pub symbols: usize,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct WavesplitArgs {
    /// One spectrum (or real waveform) per position, in position order
    #[arg(long, num_args = 2.., required = true)]
    pub spectra: Vec<PathBuf>,
    /// JSON file with `positions_m` and `velocity_m_per_s`
    #[arg(long)]
    pub geometry: PathBuf,
    #[arg(long, default_value_t = wavemetro::wavesplit::DEFAULT_COND_THRESHOLD)]
    pub cond_threshold: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
}

impl Command {
    /// Name recorded in manifests, e.g. `synth qam`.
    pub fn name(&self) -> &'static str {
        match self {
            Command::Synth(SynthCommand::Qam(_)) => "synth qam",
            Command::Synth(SynthCommand::Pair(_)) => "synth pair",
            Command::Synth(SynthCommand::Jitter(_)) => "synth jitter",
            Command::Prbs(_) => "prbs",
            Command::Cmrr(_) => "cmrr",
            Command::Interleave(_) => "interleave",
            Command::JitterComp(_) => "jitter-comp",
            Command::Evm(_) => "evm",
            Command::BerPredict(_) => "ber-predict",
            Command::BerCount(_) => "ber-count",
            Command::BerSweep(_) => "ber-sweep",
            Command::Wavesplit(_) => "wavesplit",
            Command::Replay(_) => "replay",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Command::Synth(SynthCommand::Qam(a)) => a.seed,
            Command::Synth(SynthCommand::Jitter(a)) => Some(a.seed),
            Command::BerSweep(a) => Some(a.seed),
            _ => None,
        }
    }
}

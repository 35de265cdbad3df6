use thiserror::Error;

/// Errors produced by the analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Input violated a documented precondition.
    #[error("invalid input: {0}")]
    Validation(String),

    /// The pattern length shares a factor with the reduced rate denominator,
    /// so the sample positions do not cover every reconstruction slot.
    #[error(
        "pattern length {pattern_len} is not coprime with q = {q}; only {achievable} distinct positions are reachable"
    )]
    Coprimality {
        q: u64,
        pattern_len: u64,
        achievable: u64,
    },

    /// The I/Q reference tone could not be separated from noise.
    #[error("reference tone too weak in record {record} (tone/residual power ratio {ratio:.3e})")]
    WeakReference { record: usize, ratio: f64 },

    /// Every frequency bin of a least-squares split was ill-conditioned.
    #[error("degenerate measurement geometry: every frequency bin is singular")]
    DegenerateGeometry,

    #[error("unsupported modulation order M = {0}")]
    UnsupportedModulation(usize),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

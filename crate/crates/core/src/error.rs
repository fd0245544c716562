use thiserror::Error;

/// Errors raised by model construction, detection and the benchmark harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range for {len} entries")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("duplicate index {0}")]
    DuplicateIndex(usize),

    #[error("invalid spin value {0}, expected -1 or +1")]
    InvalidSpin(i64),

    #[error("cannot clamp all {0} spins")]
    ClampAll(usize),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("symbol {re}{im:+}j is not in the constellation alphabet")]
    OffAlphabet { re: f64, im: f64 },

    #[error("search space of {candidates} candidates exceeds the exhaustive-search guard of {limit}")]
    SearchSpaceTooLarge { candidates: f64, limit: u64 },

    #[error("channel matrix is rank deficient")]
    RankDeficient,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("configuration seen twice with different energies ({first} vs {second})")]
    InconsistentEnergy { first: f64, second: f64 },

    #[error("trace file: {0}")]
    Trace(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

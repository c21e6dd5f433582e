use thiserror::Error;

/// Errors raised across the testbed.
///
/// Each variant maps onto one CLI exit code (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is numerically singular (|det| = {det:e}, floor = {floor:e})")]
    NearSingular { det: f64, floor: f64 },

    #[error("could not construct a rank-{rank} {n}x{n} matrix after {attempts} draws")]
    RankConstructionFailed { n: usize, rank: usize, attempts: usize },

    #[error("region is not certified clear of the singular set: {0}")]
    RegionUnsafe(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite loss at step {step} (trace has {} entries)", trace.len())]
    NonFiniteLoss { step: usize, trace: Vec<f64> },

    #[error("schema error at {path}: {msg}")]
    Schema { path: String, msg: String },

    #[error("base matrix is not rank n-1 (adjugate vanishes)")]
    RankPreconditionFailed,

    #[error("adversarial search exhausted after {directions} directions")]
    SearchExhausted { directions: usize },

    #[error("linear program is infeasible: the pattern region misses the box")]
    EmptyRegion,

    #[error("hidden width {width} exceeds the enumeration cap of {cap}")]
    WidthCapExceeded { width: usize, cap: usize },

    #[error("norm mismatch between composed bounds")]
    NormMismatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) | Error::Schema { .. } | Error::Io(_) => 2,
            Error::RegionUnsafe(_) => 3,
            Error::EmptyRegion => 5,
            _ => 4,
        }
    }

    pub(crate) fn schema(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            msg: msg.into(),
        }
    }
}

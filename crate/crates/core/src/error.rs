use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("state has zero norm")]
    ZeroVector,

    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("operator is not {0}")]
    OperatorProperty(&'static str),

    #[error("truncation guard violated: |xi|^2 = {xi_sq} exceeds {limit}")]
    TruncationGuard { xi_sq: f64, limit: f64 },

    #[error("strategy {label:?} is not permitted for player {player}")]
    StrategyNotPermitted { player: usize, label: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("series too short: {len} points, need at least {required}")]
    SeriesTooShort { len: usize, required: usize },

    #[error("series has zero fluctuation")]
    ConstantSeries,

    #[error("state is not contained in the grid (boundary mass fraction {fraction:e})")]
    BoundaryMass { fraction: f64 },

    #[error("wrong trader side: expected {expected}")]
    WrongSide { expected: &'static str },

    #[error("joint dimension 2^{bits} exceeds the simulation guard 2^{limit}")]
    DimensionGuard { bits: u32, limit: u32 },

    #[error("enumeration of {count} combinations exceeds limit {limit}")]
    EnumerationLimit { count: u128, limit: u128 },
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

use thiserror::Error;

/// Errors produced by the correlator, bound and optimizer routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("state has zero norm")]
    ZeroState,

    #[error("correlator undefined: zero spread with no regularization cutoff")]
    UndefinedCorrelator,

    #[error("operator `{0}` is not normal")]
    NotNormal(String),

    #[error("operator `{0}` does not have the cube-root-of-unity spectrum")]
    UnsupportedSpectrum(String),

    #[error("operator `{label}` is not Hermitian (deviation {deviation:e})")]
    NotHermitian { label: String, deviation: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown observable set `{0}`")]
    UnknownSet(String),

    #[error("objective `{objective}` returned a non-finite value at state {state}")]
    NumericalFailure { objective: String, state: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

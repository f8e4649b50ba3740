use thiserror::Error;

/// Errors shared across the crate.
///
/// Numerical routines return `TailNotCertified` or `QuadratureNonConvergence`
/// rather than silently degrading accuracy; configuration mistakes surface as
/// the structural variants with enough context to name the offending field.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("time {t} outside admissible range (0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },

    #[error("invalid time grid: {reason}")]
    InvalidTimeGrid { reason: String },

    #[error("spectral tail not certified: {reason}")]
    TailNotCertified { reason: String },

    #[error("quadrature failed to converge: {reason}")]
    QuadratureNonConvergence { reason: String },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("eigensolver failure: {reason}")]
    Eigensolver { reason: String },

    #[error("matrix not positive definite: {reason}")]
    NotPositiveDefinite { reason: String },

    #[error("invalid mixture weights: {reason}")]
    InvalidWeights { reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid_grid(reason: impl Into<String>) -> Self {
        Error::InvalidTimeGrid { reason: reason.into() }
    }

    pub fn invalid_parameter(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}

use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid covariance specification: {0}")]
    InvalidSpecification(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Factorization failed even with the largest jitter of the schedule.
    #[error("matrix is not numerically positive definite (last jitter tried: {jitter:e})")]
    NumericalConditioning { jitter: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the numerical kernels, parameter algebra and solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input contains non-finite entries")]
    NonFinite,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operator parameter {0} does not preserve matrix definiteness")]
    NotDefinitenessInvariant(String),

    #[error("eigendecomposition failed to converge")]
    EigenFailure,

    #[error("iteration diverged at k = {iteration}: {reason}")]
    Diverged { iteration: usize, reason: String },

    #[error("undefined quantity: {0}")]
    Undefined(String),

    #[error("serialization error: {0}")]
    Serialization(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

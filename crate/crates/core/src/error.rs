use alloc::string::String;

/// Errors raised by constructions and evaluation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Vector or matrix dimensions do not fit together.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension {
        /// Required dimension.
        expected: usize,
        /// Supplied dimension.
        found: usize,
    },
    /// A network or layer violates a structural invariant.
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    /// A construction parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// Grid arithmetic is inconsistent.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    /// Adaptive quadrature did not reach its tolerance.
    #[error("quadrature failed to converge (estimated error {0:e})")]
    Quadrature(f64),
}

/// Result alias used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

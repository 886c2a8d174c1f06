use std::io;

/// Errors of the std layer.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A construction or evaluation error from the core crate.
    #[error(transparent)]
    Core(#[from] reluforge_core::Error),
    /// Malformed network document.
    #[error("network document: {0}")]
    Format(String),
    /// File or stream failure.
    #[error("io: {0}")]
    Io(#[from] io::Error),
    /// Invalid configuration or command-line usage.
    #[error("usage: {0}")]
    Usage(String),
}

impl Error {
    /// Whether the error stems from invalid input rather than a failed run.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Usage(_) | Error::Core(reluforge_core::Error::InvalidParameter(_))
        )
    }
}

/// Result alias of the std layer.
pub type Result<T> = std::result::Result<T, Error>;

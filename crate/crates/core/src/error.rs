//! Error type shared across the library.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input text (series CSV, config file, or model document).
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    /// Arguments violate an operation's preconditions.
    #[error("invalid argument: {0}")]
    Validation(String),
    /// Data is too degenerate for the requested statistic or fit.
    #[error("degenerate data: {0}")]
    Degenerate(String),
    /// A design-matrix column is linearly dependent on the ones before it.
    #[error("collinear design column `{0}`")]
    Collinear(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// A value lies outside the mathematical domain of a transform.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse { line, message: message.into() }
    }
}

//! Error type shared by every module, with process exit-code categories.

use thiserror::Error;

/// Library-wide error enum. Variants map onto the three CLI exit-code
/// categories: configuration (2), numeric (3), and I/O or file format (4).
#[derive(Debug, Error)]
pub enum Error {
    /// Incompatible shapes or index out of range.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// An argument is outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A numeric routine failed (non-positive-definite system, divergence, ...).
    #[error("numeric error: {0}")]
    Numeric(String),
    /// An input violates a documented operation contract.
    #[error("contract violation: {0}")]
    Contract(String),
    /// Scenario or sweep configuration is invalid.
    #[error("config error: {0}")]
    Config(String),
    /// A file has the wrong magic, version, or layout.
    #[error("format error: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit code for the CLI: config errors 2, numeric errors 3, io/format 4.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Dimension(_) | Error::Domain(_) | Error::Numeric(_) | Error::Contract(_) => 3,
            Error::Format(_) | Error::Io(_) => 4,
        }
    }
}

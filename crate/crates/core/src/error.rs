use thiserror::Error;

/// Errors raised by the bandit library.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric input lies outside the domain of a function (NaN, infinities).
    #[error("domain error: {0}")]
    Domain(String),
    /// Invalid configuration (bad S, delta, family name, arm count, ...).
    #[error("configuration error: {0}")]
    Config(String),
    /// A caller broke a precondition (oversized action, dimension mismatch, ...).
    #[error("contract violation: {0}")]
    Contract(String),
    /// A numerical routine failed (matrix not positive definite, ...).
    #[error("numeric error: {0}")]
    Numeric(String),
    /// Malformed arm file.
    #[error("load error at line {line}: {msg}")]
    Load { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Matrix dimensions do not conform.
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// The normal-equation system could not be factorized.
    #[error("singular system (pivot {pivot} at column {column}); use a ridge penalty lambda > 0")]
    Singular { column: usize, pivot: f64 },
    /// A configuration violates one of its invariants.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// A caller broke an operation contract (e.g. malformed action).
    #[error("contract violation: {0}")]
    Contract(String),
    /// A serialized model could not be decoded.
    #[error("model format error: {0}")]
    Format(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

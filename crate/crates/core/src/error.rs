use thiserror::Error;

/// Errors raised by grid, operator and experiment construction.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The grid is too coarse to represent the requested object.
    #[error("resolution error: {0}")]
    Resolution(String),
    /// Two objects live on different grids.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    /// Configuration or serialized input violates its schema.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// A constructive procedure could not produce its certificate.
    #[error("construction failed: {0}")]
    Construction(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

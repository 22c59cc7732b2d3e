use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A request above a configured ceiling.
    #[error("capacity exceeded: {what} = {requested} exceeds ceiling {ceiling}")]
    Capacity {
        what: &'static str,
        requested: u64,
        ceiling: u64,
    },

    /// Caller misuse such as mixing series with different truncations.
    #[error("usage error: {0}")]
    Usage(String),

    /// The data at hand does not reach far enough for the request.
    #[error("insufficient data: need {needed}, have {available}")]
    InsufficientData { needed: u64, available: u64 },

    #[error("unsupported eta quotient: {0}")]
    UnsupportedQuotient(String),

    #[error("unsupported form: {0}")]
    UnsupportedForm(String),

    #[error("unknown form id `{0}`")]
    UnknownForm(String),

    /// Internal consistency check failed (e.g. CRT guard residue mismatch).
    #[error("consistency check failed: {0}")]
    Consistency(String),

    #[error("malformed cache file {path}: {reason}")]
    Cache { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn insufficient(needed: u64, available: u64) -> Self {
        Error::InsufficientData { needed, available }
    }
}

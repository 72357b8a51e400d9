use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain the operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unknown catalog entry `{0}`")]
    Lookup(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// A proven bound was observed to fail; indicates a construction bug.
    #[error("internal invariant violated: {0}")]
    InternalInvariant(String),
    #[error("config error in key `{key}`: {msg}")]
    Config { key: String, msg: String },
    #[error("fit error: {0}")]
    Fit(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

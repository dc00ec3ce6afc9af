use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The operation is not defined for this combination of inputs.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// A tail integral (for instance the mean residual life) diverges.
    #[error("divergent: {0}")]
    Divergent(String),
    /// A quantity that must be finite and positive is not.
    #[error("degenerate: {0}")]
    Degenerate(String),
    /// A count reached the edge of the simulated window, so the true count is unknown.
    #[error("censored count: {0}")]
    Censored(String),
    /// A numerical routine failed to reach its tolerance.
    #[error("no convergence: {0}")]
    NoConvergence(String),
    /// Invalid experiment configuration; `field` names the offending key.
    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(field: &str, reason: impl Into<String>) -> Self {
        Error::Config { field: field.to_string(), reason: reason.into() }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

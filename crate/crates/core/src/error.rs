use thiserror::Error;

/// Errors raised by model construction, configuration parsing and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration document line could not be accepted.
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    /// Required configuration keys are absent.
    #[error("missing required keys: {}", .0.join(", "))]
    MissingKeys(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

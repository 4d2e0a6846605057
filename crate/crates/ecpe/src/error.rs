use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("document {doc_id}: {reason}")]
    Validation { doc_id: String, reason: String },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error("{}: checkpoint version {found}, this build reads version {expected}", path.display())]
    Version { path: PathBuf, found: u32, expected: u32 },
    #[error("{}: {message}", path.display())]
    Corrupt { path: PathBuf, message: String },
    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error("{0}")]
    Argument(String),
    #[error(transparent)]
    Core(epo_core::Error),
}

impl Error {
    /// Stable one-word error class for machine consumption.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::Validation { .. } => "validation",
            Error::Format { .. } => "format",
            Error::Version { .. } => "version",
            Error::Corrupt { .. } => "corrupt",
            Error::Config(_) => "config",
            Error::Argument(_) => "argument",
            Error::Core(epo_core::Error::NonFinite(_)) => "non-finite",
            Error::Core(epo_core::Error::Validation { .. }) => "validation",
            Error::Core(epo_core::Error::Argument(_)) => "argument",
            Error::Core(_) => "internal",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

impl From<epo_core::Error> for Error {
    fn from(e: epo_core::Error) -> Self {
        match e {
            epo_core::Error::Validation { doc_id, reason } => Error::Validation { doc_id, reason },
            other => Error::Core(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

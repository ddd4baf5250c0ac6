use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid corpus: {0}")]
    Corpus(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("configuration has {} violation(s): {}", .0.len(), .0.join("; "))]
    Violations(Vec<String>),

    #[error("id mismatch: {0}")]
    IdMismatch(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("insufficient data: {0}")]
    Insufficient(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// Short machine-readable tag, used by the CLI error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::Corpus(_) => "corpus",
            Error::Config(_) => "config",
            Error::Violations(_) => "violations",
            Error::IdMismatch(_) => "id_mismatch",
            Error::Invariant(_) => "invariant",
            Error::Insufficient(_) => "insufficient",
        }
    }
}

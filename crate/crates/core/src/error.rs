use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A physical or numerical precondition on an input parameter failed.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The eigensolver did not converge; `context` names the matrix.
    #[error("eigensolver did not converge for {context}")]
    NoConvergence { context: String },

    /// A derived quantity left its admissible range.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A scan point failed; `location` names the grid coordinate.
    #[error("scan point {location}: {source}")]
    ScanPoint {
        location: String,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration error for key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("malformed table: {0}")]
    MalformedTable(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn at(self, location: impl Into<String>) -> Self {
        Error::ScanPoint {
            location: location.into(),
            source: Box::new(self),
        }
    }

    /// Process exit code for the CLI: 2 config, 3 numerical, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter { .. } | Error::Config { .. } => 2,
            Error::NoConvergence { .. } | Error::Numerical(_) => 3,
            Error::Io { .. } | Error::MalformedTable(_) => 4,
            Error::ScanPoint { source, .. } => source.exit_code(),
        }
    }
}

//! Error type shared by every module of the crate.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A text input (feature CSV or label file) failed to parse.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("degenerate supervision: {positives} positive and {negatives} negative pairs; both sides must be nonempty")]
    DegenerateSupervision { positives: usize, negatives: usize },

    #[error("not an LRBS model file: {0}")]
    BadModelFile(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn dimension(
        context: &'static str,
        expected: impl ToString,
        actual: impl ToString,
    ) -> Self {
        Error::Dimension {
            context,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line tool.
    ///
    /// `2` for I/O, `3` for validation (bad arguments, malformed inputs,
    /// shape mismatches) and `4` for numerical aborts.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            Error::Numerical(_) => 4,
            Error::Parse { .. }
            | Error::Dimension { .. }
            | Error::InvalidArgument(_)
            | Error::NonFinite(_)
            | Error::DegenerateSupervision { .. }
            | Error::BadModelFile(_) => 3,
        }
    }
}

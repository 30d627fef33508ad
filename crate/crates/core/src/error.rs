use std::io;
use std::time::Duration;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} variables, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range for {len} variables")]
    IndexOutOfRange { index: usize, len: usize },

    /// A value or structure violates a documented invariant.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A file did not match its schema; `path` names the offending field.
    #[error("{file}: field `{path}`: {message}")]
    Format {
        file: String,
        path: String,
        message: String,
    },

    #[error("exact enumeration refused: {num_vars} variables exceeds the cap of {cap}; use the anneal, tabu or greedy subsolver")]
    ExactTooLarge { num_vars: usize, cap: usize },

    #[error("external backend: {0}")]
    External(#[from] ExternalError),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors raised by a subsolver or backend rather than by bad input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(self, Error::External(_))
    }
}

/// Failure modes of the subprocess backend protocol. Each is distinct so a
/// caller can decide whether to fall back to another subsolver.
#[derive(Debug, Error)]
pub enum ExternalError {
    #[error("no backend command configured")]
    NoCommand,

    #[error("failed to spawn `{command}`: {source}")]
    Spawn {
        command: String,
        #[source]
        source: io::Error,
    },

    #[error("backend did not answer within {0:?}")]
    Timeout(Duration),

    #[error("backend exited with status {status}: {stderr}")]
    ExitStatus { status: String, stderr: String },

    #[error("malformed response: {0}")]
    Malformed(String),

    #[error("backend returned {found} assignment values for {expected} variables")]
    WrongLength { expected: usize, found: usize },

    #[error("pipe error: {0}")]
    Pipe(#[source] io::Error),
}

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the simulator or experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter, dimension or config invariant is violated.
    #[error("configuration error: {0}")]
    Config(String),

    /// A series to be normalized has zero variance.
    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    /// A readout trace is constant (for example an empty mask).
    #[error("degenerate output: {0}")]
    DegenerateOutput(String),

    #[error("fit failed: {0}")]
    FitFailure(String),

    /// Malformed CSV input; `line` is 1-indexed and counts the header.
    #[error("{path}:{line}: parse error: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

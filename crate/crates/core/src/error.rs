use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: {left} transcript records vs {right} hypotheses")]
    LengthMismatch { left: usize, right: usize },

    #[error("stream has {len} hypotheses but the procedure was configured for at most {max}")]
    StreamTooLong { len: usize, max: usize },

    #[error("power is undefined: the stream has no non-null hypotheses")]
    NoNonNulls,

    #[error("cannot aggregate an empty set of trials")]
    EmptyAggregate,

    #[error("{path}:{line}: {message}")]
    Config { path: String, line: usize, message: String },

    #[error("config: {0}")]
    Invalid(String),

    #[error("cell {cell}: {source}")]
    Cell {
        cell: String,
        #[source]
        source: Box<Error>,
    },

    #[error("nothing to plot: {0}")]
    EmptySeries(String),

    #[error("plot rendering failed: {0}")]
    Plot(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: malformed row {row}: {message}")]
    CsvRow { path: PathBuf, row: usize, message: String },
}

impl Error {
    /// Configuration problems (exit code 1) versus runtime failures (exit code 2).
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::InvalidParameter(_) | Error::Config { .. } | Error::Invalid(_) => true,
            Error::Cell { source, .. } => source.is_config_error(),
            _ => false,
        }
    }
}

use std::io;

use thiserror::Error;

/// Errors produced by the `langrep` library.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input text. `line` is 1-based; `column` is a 1-based
    /// character position when the format is position-oriented.
    #[error("parse error at line {line}{}: {message}", column.map(|c| format!(", column {c}")).unwrap_or_default())]
    Parse {
        line: usize,
        column: Option<usize>,
        message: String,
    },

    /// Input that parsed but violates a structural invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// A caller-supplied argument is out of range or inconsistent.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A numerical procedure could not produce a defined result.
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column: None,
            message: message.into(),
        }
    }

    pub(crate) fn parse_at(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column: Some(column),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

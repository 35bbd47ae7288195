use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the solver and its I/O layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid matrix entry: {0}")]
    InvalidEntry(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: index ({row}, {col}) outside block {block} of size {size}")]
    IndexOutOfBlock {
        line: usize,
        block: usize,
        row: usize,
        col: usize,
        size: usize,
    },

    #[error("missing section: {0}")]
    MissingSection(&'static str),

    #[error("numerical failure in {phase} at iteration {iteration}: {message}")]
    NumericalFailure {
        phase: &'static str,
        iteration: usize,
        message: String,
    },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            actual,
        })
    }
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: String,
        got: String,
    },

    #[error("index out of range: {what} = {index}, valid range 1..={max}")]
    Index {
        what: &'static str,
        index: usize,
        max: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("observation signal is identically zero; noise level undefined at finite SNR")]
    DegenerateSignal,

    #[error("non-finite iterate at outer pass {outer}, inner iteration {iteration}")]
    Divergence { outer: usize, iteration: usize },

    #[error("linear system for column {column} is not positive definite")]
    Singular { column: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_err(context: &'static str, expected: (usize, usize), got: (usize, usize)) -> Error {
    Error::Dimension {
        context,
        expected: format!("{}x{}", expected.0, expected.1),
        got: format!("{}x{}", got.0, got.1),
    }
}

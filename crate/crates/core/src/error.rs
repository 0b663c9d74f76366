use thiserror::Error;

/// Errors raised by tensor algebra, solvers, generators and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mode {0}: expected 1, 2 or 3")]
    Mode(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("out of range: {0}")]
    Range(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("parse error: {0}")]
    Format(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("solver diverged: {0}")]
    Diverged(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

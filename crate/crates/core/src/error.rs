use thiserror::Error;

/// Errors raised by every fallible operation in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("absolute continuity violated at atom {index}: P = {p} but Q = 0")]
    Domination { index: usize, p: f64 },

    #[error("resource cap exceeded: {0}")]
    Resource(String),

    #[error("degenerate marginal: {0}")]
    DegenerateMarginal(String),

    #[error("boundary value: {0}")]
    Boundary(String),

    #[error("value out of range: {0}")]
    Range(String),

    #[error("convex function specification: {0}")]
    Spec(String),

    #[error("unknown bound `{0}`")]
    Lookup(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Parse {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}

pub(crate) fn ensure(cond: bool, err: impl FnOnce() -> Error) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(err())
    }
}

use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("vector norm {0:e} is too small to normalize")]
    NearZero(f64),

    #[error("bad parameter: {0}")]
    BadParam(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("face {face} is degenerate (singular-value ratio {ratio:e})")]
    DegenerateFace { face: usize, ratio: f64 },

    #[error("inconsistent normal orientation at face {face}")]
    Orientation { face: usize },

    #[error("ambient dimension {0} is not supported here (only 4)")]
    UnsupportedAmbient(usize),

    #[error("SPD solve failed: {0}")]
    SolveFailure(String),

    #[error("immersions do not share mesh combinatorics")]
    MeshMismatch,

    #[error("test function is {value:e} at boundary-adjacent vertex {vertex}")]
    SupportViolation { vertex: usize, value: f64 },

    #[error("line search stalled at iteration {iteration} (residual {residual:e})")]
    LineSearchStall { iteration: usize, residual: f64 },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

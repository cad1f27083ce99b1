use thiserror::Error;

/// Errors raised by the simulator and its diagnostics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("mode index {index:?} outside 1..={limit:?}")]
    ModeOutOfRange {
        index: Vec<usize>,
        limit: Vec<usize>,
    },
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("invalid medium parameters: {0}")]
    InvalidParams(String),
    #[error("invalid initial data: {0}")]
    InvalidInitialData(String),
    #[error("invalid step configuration: {0}")]
    InvalidStepConfig(String),
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("picard iteration failed to converge at t = {time} after {iterations} iterations")]
    PicardFailed { time: f64, iterations: usize },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

use crate::lattice::{MAX_COORD, MAX_DIM};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension {0} is out of range (2..={MAX_DIM})")]
    Dimension(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coordinate {0} exceeds the supported magnitude {MAX_COORD}")]
    CoordinateRange(i128),

    #[error("no transverse direction: {0:?} is a multiple of the diagonal")]
    NoTransverseDirection(Vec<i64>),

    #[error("invalid probability {0:?}")]
    Probability(String),

    #[error("eta = {num}/{den} must lie in [0, 1)")]
    Eta { num: u64, den: u64 },

    #[error("window of {volume} sites exceeds the budget of {budget} sites")]
    WindowTooLarge { volume: u128, budget: usize },

    #[error("invalid window: {0}")]
    Window(String),

    #[error("point {0:?} lies outside the window")]
    OutsideWindow(Vec<i64>),

    #[error("source {0:?} does not lie in the slab")]
    OutsideSlab(Vec<i64>),

    #[error("invalid parameter: {0}")]
    Invalid(String),

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("total masses differ: {0} vs {1}")]
    MassMismatch(f64, f64),
    #[error("degenerate segment")]
    DegenerateSegment,
    #[error("atom grids do not match")]
    GridMismatch,
    #[error("simplex exceeded {0} pivots")]
    PivotLimit(usize),
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("nonpositive density {value} at grid node {node}")]
    NonPositive { node: usize, value: f64 },
    #[error("value out of bounds: {0}")]
    OutOfBounds(String),
    #[error("curve is not unit speed: segment {segment} has speed {speed}")]
    NotNormalized { segment: usize, speed: f64 },
    #[error("unknown example id {0:?}")]
    UnknownFixture(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

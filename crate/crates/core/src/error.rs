use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("dimension d = {0} is not implemented (only d = 1)")]
    DimensionNotImplemented(usize),

    #[error("derivative order {order} exceeds cap {cap}")]
    OrderCap { order: usize, cap: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("zero window")]
    ZeroWindow,

    #[error("unsupported norm geometry: {0}")]
    UnsupportedNorm(String),

    #[error("iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize, history: Vec<f64> },

    #[error("singular symbol: {0}")]
    SingularSymbol(String),

    #[error("cost cap exceeded: {0}")]
    CostCap(String),

    #[error("linear algebra failure: {0}")]
    LinAlg(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

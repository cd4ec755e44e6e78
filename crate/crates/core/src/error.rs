use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("dimension mismatch: {what} (expected {expected}, found {found})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("simplex exceeded {0} iterations")]
    IterationLimit(usize),

    #[error("numerical instability: {0}")]
    NumericalInstability(String),

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("search limit of {nodes} nodes exceeded (incumbent {incumbent}, bound {bound})")]
    LimitExceeded {
        nodes: u64,
        incumbent: f64,
        bound: f64,
    },

    #[error("undefined bound: {0}")]
    UndefinedBound(&'static str),

    #[error("need at least 2 samples for a confidence interval, got {0}")]
    DegenerateSample(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

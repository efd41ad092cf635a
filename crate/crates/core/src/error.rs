use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("parameter `{name}` is not finite ({value})")]
    NonFiniteParameter { name: String, value: f64 },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("nodes must be distinct (got {0} twice)")]
    SelfPair(usize),

    #[error("node {node} out of range for n = {n}")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("level {level} out of range for variable {variable} with {levels} levels")]
    LevelOutOfRange {
        variable: usize,
        level: usize,
        levels: usize,
    },

    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),

    #[error("state is infeasible under the constraint set: {0}")]
    Infeasible(String),

    #[error("degenerate sample space: {0}")]
    DegenerateSpace(String),

    #[error("stale move: {0}")]
    StaleMove(String),

    #[error("stub matching gave up after {0} attempts")]
    RetryBudgetExhausted(usize),

    #[error("running statistics drifted from full recomputation after step {step}")]
    StatsDrift { step: usize },

    #[error("enumeration cap exceeded: {count} states > cap {cap}")]
    EnumerationCap { count: u128, cap: u128 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures that come from the input data rather than from
    /// configuration or numerics.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::Data(_) | Error::Io(_) | Error::Csv(_)
        )
    }

    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite(_)
                | Error::NonFiniteParameter { .. }
                | Error::StatsDrift { .. }
                | Error::RetryBudgetExhausted(_)
                | Error::DegenerateSpace(_)
                | Error::InsufficientSamples(_)
        )
    }
}

use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// A time that must be a grid point is not one.
    #[error("time {time} is not a grid point of a path with step {step}")]
    OffGrid { time: f64, step: f64 },
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid input: {0}")]
    Input(String),
    /// The requested size exceeds what the operation supports.
    #[error("resource limit: {0}")]
    Resource(String),
    /// A randomized procedure ran out of its budget. Retrying with a fresh
    /// random stream may succeed.
    #[error("{what}: budget of {budget} exhausted")]
    BudgetExceeded { what: &'static str, budget: u64 },
}

impl Error {
    pub fn is_retryable(&self) -> bool {
        matches!(self, Error::BudgetExceeded { .. })
    }
}

use thiserror::Error;

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] levytree_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Whether the error was caused by the caller's input rather than a
    /// failure while running.
    pub fn is_input(&self) -> bool {
        match self {
            CliError::Input(_) | CliError::Csv(_) | CliError::Json(_) => true,
            CliError::Core(e) => !e.is_retryable(),
            CliError::Io(_) => true,
        }
    }
}

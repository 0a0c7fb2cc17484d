use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] replan_core::Error),
    #[error("no solution: {0}")]
    NoSolution(String),
    #[error("{failed} of {total} episodes failed; see the error column of metrics.csv")]
    EpisodeFailure { failed: usize, total: usize },
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::NoSolution(_) => 2,
            CliError::EpisodeFailure { .. } | CliError::Core(replan_core::Error::InfeasibleStart) => 3,
            _ => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

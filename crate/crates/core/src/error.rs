use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("point of interest index {index} out of range (model has {count})")]
    InvalidPoi { index: usize, count: usize },
    #[error("invalid robot model: {0}")]
    InvalidModel(String),
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("invalid human script: {0}")]
    InvalidScript(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("robot and human points coincide; closing direction undefined")]
    DegenerateDirection,
    #[error("zero-length connection")]
    ZeroLengthConnection,
    #[error("path needs at least two waypoints, got {0}")]
    PathTooShort(usize),
    #[error("informed set is empty: best cost {c_best} is below the minimum {c_min}")]
    EmptyInformedSet { c_best: f64, c_min: f64 },
    #[error("could not draw a sample inside the joint limits after {0} attempts")]
    SamplingExhausted(usize),
    #[error("infeasible start configuration")]
    InfeasibleStart,
    #[error("scenario error: {0}")]
    Scenario(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

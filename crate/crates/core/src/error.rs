use thiserror::Error;

/// Errors produced across the workbench.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid MDP: {0}")]
    InvalidSpec(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("risk level alpha must lie in (0, 1], got {0}")]
    AlphaOutOfRange(f64),

    #[error("distribution is empty")]
    EmptyDistribution,

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("enumeration of {count} items exceeds the cap of {cap}")]
    EnumerationTooLarge { count: u128, cap: u128 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("objective not supported here: {0}")]
    UnsupportedObjective(String),

    #[error("episode {episode} requested but the learner was configured for {total} episodes")]
    EpisodeBudgetExceeded { episode: usize, total: usize },

    #[error("run {run_id} did not stop within {cap} episodes")]
    EpisodeCapExceeded { run_id: usize, cap: usize },

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

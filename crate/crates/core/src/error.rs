use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid CSI model: {0}")]
    InvalidModel(String),

    #[error("insufficient data: need {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("singular user selection (condition number {cond:.3e})")]
    SingularSelection { cond: f64 },

    #[error("no user can benefit from power (all weight·gain products are zero)")]
    NoBeneficiary,

    #[error("unsupported CSI model for user {user}: {reason}")]
    UnsupportedModel { user: usize, reason: &'static str },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

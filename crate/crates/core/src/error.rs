use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A subproblem (or the whole instance) has no feasible point.
    /// `slot` carries the first violated slot index when known (0-based).
    #[error("infeasible ({stage}): {detail}")]
    Infeasible {
        stage: &'static str,
        detail: String,
        slot: Option<usize>,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("oracle budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn infeasible(stage: &'static str, detail: impl Into<String>) -> Self {
        Error::Infeasible {
            stage,
            detail: detail.into(),
            slot: None,
        }
    }

    pub fn infeasible_at(stage: &'static str, slot: usize, detail: impl Into<String>) -> Self {
        Error::Infeasible {
            stage,
            detail: detail.into(),
            slot: Some(slot),
        }
    }
}

use thiserror::Error;

use crate::solution::Step;

pub type Result<T, E = CopError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CopError {
    #[error("enumeration budget of {budget} nodes exceeded")]
    BudgetExceeded { budget: usize },

    #[error("illegal step {step}: {reason}")]
    IllegalStep { step: Step, reason: String },

    #[error("partial solution {0} cannot be extended to a feasible solution")]
    NotExtendable(String),

    #[error("illegal neutral action: partial solution is not feasible")]
    IllegalNeutral,

    #[error("dead end: state has no allowed action")]
    DeadEnd,

    #[error("instance has {size} decision nodes, solver limit is {limit}")]
    SizeLimit { size: usize, limit: usize },

    #[error("every action is masked")]
    AllMasked,

    #[error("solution is infeasible: {0}")]
    InfeasibleSolution(String),

    #[error("trajectory too short: need {needed} steps, have {available}")]
    TrajectoryTooShort { needed: usize, available: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("problem mismatch: expected {expected}, got {got}")]
    ProblemMismatch { expected: String, got: String },

    #[error("unsupported edge weight type {0}")]
    UnsupportedEdgeWeightType(String),

    #[error("malformed section: {0}")]
    MalformedSection(String),

    #[error("missing reference value for instance {0}")]
    MissingReference(usize),

    #[error("verification failed: {0}")]
    VerificationFailed(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CopError {
    /// Process exit code grouping errors by category.
    pub fn exit_code(&self) -> i32 {
        match self {
            CopError::Config(_) | CopError::ProblemMismatch { .. } => 2,
            CopError::Io(_) => 3,
            CopError::Json(_)
            | CopError::UnsupportedEdgeWeightType(_)
            | CopError::MalformedSection(_)
            | CopError::Checkpoint(_) => 4,
            CopError::SizeLimit { .. } | CopError::BudgetExceeded { .. } => 5,
            CopError::MissingReference(_) => 6,
            CopError::VerificationFailed(_) => 7,
            _ => 1,
        }
    }
}

use thiserror::Error;

/// Errors raised by the probabilistic model itself.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("mean adjustment infeasible for Q = {quality}, sigma = {sigma}: {reason}")]
    AdjustmentInfeasible {
        quality: f64,
        sigma: f64,
        reason: String,
    },
}

/// Errors raised when aggregating a paper's reviews.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("{rule} needs at least {needed} reviews, got {got}")]
    InsufficientReviews {
        rule: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("review set is malformed: {0}")]
    MalformedReviews(String),
}

/// Errors from the exact solver and its enumeration oracle.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExactError {
    #[error("instance has {papers} papers, above the size guard of {limit}")]
    InstanceTooLarge { papers: usize, limit: usize },
    #[error("enumeration needs about {steps:.3e} steps, above the budget of {budget:.3e}")]
    BudgetExceeded { steps: f64, budget: f64 },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Errors from the Monte Carlo engine and the strategy layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("scenario violates `{0}`")]
    Validation(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error("cannot merge reports from different configurations ({0} vs {1})")]
    ConfigMismatch(String, String),
    #[error("nothing to merge")]
    EmptyMerge,
}

use thiserror::Error;

/// Everything that can go wrong inside the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SkewError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("f0' - 1 has no sign change on [0,1]")]
    NoUnitDerivativeCrossing,

    #[error("fiber orbit does not close up with the word's period")]
    NotPeriodic,

    #[error("interval of fixed points detected near x = {x}")]
    DegenerateRoot { x: f64 },

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("return time M(H) = {found} exceeds the bound {bound}")]
    MBoundExceeded { found: usize, bound: usize },

    #[error("iteration cap of {0} reached")]
    IterationCap(usize),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("budget of {budget} nodes exhausted (partial max gap {partial_gap})")]
    BudgetExhausted { budget: usize, partial_gap: f64 },

    #[error("precision loss: {0}")]
    PrecisionLoss(String),

    #[error("return map does not reverse orientation (derivative {0})")]
    OrientationError(f64),

    #[error("commutation f0 f1 = f1 f0^-1 violated by {0:e}")]
    CommutationViolated(f64),
}

pub type Result<T> = std::result::Result<T, SkewError>;

impl SkewError {
    /// Coarse category used by front ends to pick an exit status.
    pub fn category(&self) -> ErrorCategory {
        match self {
            SkewError::InvalidParameter(_) => ErrorCategory::Validation,
            SkewError::NotFound(_)
            | SkewError::BudgetExhausted { .. }
            | SkewError::IterationCap(_)
            | SkewError::NoSolution(_) => ErrorCategory::Search,
            _ => ErrorCategory::Numerical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Validation,
    Search,
    Numerical,
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A closed-form bound was evaluated outside the range where it is stated.
    #[error("outside the validity domain: {0}")]
    Domain(String),

    #[error("work budget exceeded: needs {required} subset checks, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("matrix has a trivial nullspace")]
    NoNullspace,

    #[error("vector is not in the nullspace (relative residual {residual:e})")]
    NotInNullspace { residual: f64 },

    #[error("phantom target rho={target} unreachable, best achieved rho={best}")]
    PhantomUnreachable { target: f64, best: f64 },

    #[error("no phase transition detected: {0}")]
    NoTransition(String),

    #[error("linear solver failure: {0}")]
    Solver(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

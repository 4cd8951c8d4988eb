use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("duplicate variable name `{0}`")]
    DuplicateVariable(String),

    #[error("variable sets overlap on `{0}`")]
    Overlap(String),

    #[error("empty variable set: {0}")]
    EmptySet(&'static str),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("state space of {needed} entries exceeds the budget of {budget}")]
    SizeBudget { needed: usize, budget: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("linear program failed: {0}")]
    LinearProgram(String),

    /// A provable inequality was violated beyond tolerance. Always indicates a bug.
    #[error("solver invariant violated: {0}")]
    SolverBug(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

use crate::mrp::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown state `{0}`")]
    UnknownState(String),

    #[error("state `{0}` is declared more than once")]
    DuplicateState(String),

    #[error("`{0}` is reserved for the terminal state and cannot be declared")]
    ReservedName(String),

    #[error("spec failed validation:\n{0}")]
    InvalidSpec(ValidationReport),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("linear system is numerically singular (pivot {pivot:e} in column {column})")]
    Singular { column: usize, pivot: f64 },

    #[error("trajectory exceeded the step cap of {cap} transitions")]
    StepCapExceeded { cap: usize },

    #[error("spec is cyclic (cycle through `{0}`); exact enumeration needs an acyclic spec")]
    Cyclic(String),

    #[error("more than {cap} trajectories start at `{state}`")]
    EnumerationCapExceeded { state: String, cap: usize },

    #[error("infeasible marginals: {0}")]
    InfeasibleMarginals(String),

    #[error("transportation problem has {cells} cells, more than the limit of {limit}")]
    ProblemTooLarge { cells: usize, limit: usize },

    #[error("transportation simplex did not converge within {0} pivots")]
    SolverStalled(usize),

    #[error("a trajectory can visit both `{0}` and `{1}`")]
    NotDisjoint(String, String),

    #[error("no data for state `{0}`")]
    Undefined(String),

    #[error("ratio is 0/0 for state `{0}`: the MC asymptotic variance is zero")]
    DegenerateRatio(String),

    #[error("advantage {0:e} is too close to zero to rank the two states")]
    DegenerateAdvantage(f64),

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("weighting has no nonzero entry")]
    EmptyWeighting,

    #[error("dataset does not match spec: {0}")]
    InvalidDataset(String),

    #[error("malformed MRP file: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Failures caused by the numerics of an otherwise well-formed request:
    /// singular systems, runaway trajectories, enumeration limits, cyclic
    /// specs handed to exact routines.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. }
                | Error::StepCapExceeded { .. }
                | Error::Cyclic(_)
                | Error::EnumerationCapExceeded { .. }
                | Error::SolverStalled(_)
                | Error::ProblemTooLarge { .. }
                | Error::DegenerateRatio(_)
                | Error::DegenerateAdvantage(_)
        )
    }
}

use thiserror::Error;

use crate::ccb::CcbSolution;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("intersection has empty interior (gamma = {gamma:.3e})")]
    EmptyInterior { gamma: f64 },

    #[error("point is not strictly interior: constraint {index} evaluates to {value:.3e}")]
    NotInterior { index: usize, value: f64 },

    #[error("work budget exceeded: {required} items requested, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    /// The active-set enumeration produced no feasible candidate. `fallback_value` is the
    /// best value the sampling oracle could find, if any.
    #[error("enumeration found no feasible candidate (oracle fallback value: {fallback_value:?})")]
    NoCandidate {
        fallback_value: Option<f64>,
        fallback_point: Option<Vec<f64>>,
    },

    #[error("iteration limit of {iterations} reached (gap estimate {gap_estimate:.3e})")]
    IterationLimit {
        iterations: usize,
        gap_estimate: f64,
        best: Option<Box<CcbSolution>>,
    },

    #[error("planar solver requires n = 2, got n = {0}")]
    DimensionError(usize),

    #[error("malformed instance file at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

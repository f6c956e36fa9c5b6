use thiserror::Error;

use crate::model::JobId;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("insufficient capacity: speed profile completes only {capacity} work units, {requested} requested")]
    InsufficientCapacity { capacity: String, requested: String },
    #[error("infeasible budget: {0}")]
    InfeasibleBudget(String),
    #[error("instance too large for exhaustive enumeration: n = {n}, bound = {bound}")]
    InstanceTooLarge { n: usize, bound: usize },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown job id {0}")]
    UnknownJob(JobId),
    #[error("cannot parse rational {0:?}")]
    Parse(String),
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error("state space limit exceeded: {0}")]
    StateLimit(String),
}

pub type Result<T> = std::result::Result<T, Error>;

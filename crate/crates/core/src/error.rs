use alloc::string::String;

use crate::geometry::GoalId;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parameter constraint violated: {0}")]
    Parameter(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("non-monotonic timestamp: {t} does not follow {previous}")]
    NonMonotonic { previous: f64, t: f64 },
    #[error("duplicate goal id `{0}`")]
    DuplicateGoal(GoalId),
    #[error("unknown goal id `{0}`")]
    UnknownGoal(GoalId),
    #[error("undefined hand pose: {0}")]
    UndefinedPose(String),
    #[error("inconsistent state: {0}")]
    Inconsistent(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}

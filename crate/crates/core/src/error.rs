use thiserror::Error;

use crate::ffg::CohortId;

/// Errors produced by the analytic models and the protocol simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LeakError {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),

    #[error("time must be strictly positive, got {0}")]
    NonPositiveTime(f64),

    #[error("stake must be strictly positive, got {0}")]
    NonPositiveStake(f64),

    #[error("active validators are never ejected")]
    NeverEjected,

    #[error("unknown cohort {0:?}")]
    UnknownCohort(CohortId),

    #[error("cohort {0:?} is ejected")]
    EjectedCohort(CohortId),

    #[error("cohort {cohort:?} voted twice in epoch {epoch} on branch {branch}")]
    DuplicateVote { cohort: CohortId, epoch: i64, branch: u32 },

    #[error("vote does not reference a checkpoint of branch {branch}: {reason}")]
    ForeignVote { branch: u32, reason: &'static str },

    #[error("penalties can only be applied while the inactivity leak is active")]
    LeakInactive,

    #[error("unknown {kind} `{name}`")]
    UnknownStrategy { kind: &'static str, name: String },

    #[error("invalid scenario: {field}: {reason}")]
    InvalidConfig { field: String, reason: String },
}

pub type Result<T, E = LeakError> = std::result::Result<T, E>;

pub(crate) fn check_proportion(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(LeakError::InvalidParameter {
            name,
            value,
            reason: "must lie in (0, 1)",
        })
    }
}

pub(crate) fn check_byzantine_share(name: &'static str, value: f64) -> Result<()> {
    // 1/3 itself is accepted: several closed forms are evaluated at the boundary.
    if value.is_finite() && (0.0..=1.0 / 3.0).contains(&value) {
        Ok(())
    } else {
        Err(LeakError::InvalidParameter {
            name,
            value,
            reason: "must lie in [0, 1/3]",
        })
    }
}

pub(crate) fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(LeakError::NegativeTime(t))
    }
}

pub(crate) fn check_positive_time(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(LeakError::NonPositiveTime(t))
    }
}

//! Continuous-time model of the inactivity leak.
//!
//! Stake is treated as a differentiable function obeying
//! `s'(t) = -I(t) s(t) / 2^26`. With a linear inactivity score `I(t) = r t`
//! the solution is `s(t) = s0 exp(-r t^2 / 2^27)`, which gives the three
//! closed-form trajectories used throughout this module:
//!
//! * active: `r = 0`, stake stays at `s0`;
//! * semi-active (active every other epoch): `r = 3/2`, `s0 exp(-3 t^2 / 2^28)`;
//! * inactive: `r = 4`, `s0 exp(-t^2 / 2^25)`.
//!
//! All ratios are stake-weighted proportions; validator counts and `s0` cancel.

use serde::{Deserialize, Serialize};

use crate::error::{check_byzantine_share, check_proportion, check_time, LeakError, Result};
use crate::numeric::{bisect_first_true, BISECTION_MAX_ITERATIONS, BISECTION_TOLERANCE};

/// `2^26`: the divisor in the per-epoch penalty `I * s / 2^26`.
pub const PENALTY_SCALE: f64 = 67_108_864.0;
pub const INITIAL_STAKE: f64 = 32.0;
pub const EJECTION_THRESHOLD: f64 = 16.75;
/// Epoch at which always-inactive validators are ejected (published constant).
pub const INACTIVE_EJECTION_EPOCH: f64 = 4685.0;
/// Epoch at which semi-active validators are ejected (published constant).
pub const SEMI_ACTIVE_EJECTION_EPOCH: f64 = 7652.0;
/// The same quantity as quoted for alternating Byzantine validators in the
/// bouncing-attack discussion; one epoch later than [`SEMI_ACTIVE_EJECTION_EPOCH`].
pub const SEMI_ACTIVE_EJECTION_EPOCH_ALT: f64 = 7653.0;

const TWO_THIRDS: f64 = 2.0 / 3.0;

/// Activity pattern of a validator during the leak, as seen from one branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BehaviorKind {
    Active,
    SemiActive,
    Inactive,
}

impl BehaviorKind {
    pub const ALL: [BehaviorKind; 3] = [Self::Active, Self::SemiActive, Self::Inactive];

    /// Average inactivity-score growth per epoch.
    pub fn score_rate(self) -> f64 {
        match self {
            Self::Active => 0.0,
            // +4 then -1 every two epochs.
            Self::SemiActive => 1.5,
            Self::Inactive => 4.0,
        }
    }

    /// Coefficient `c` in `s(t) = s0 exp(-c t^2)`.
    pub fn decay_coefficient(self, penalty_scale: f64) -> f64 {
        self.score_rate() / (2.0 * penalty_scale)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeakParams {
    pub penalty_scale: f64,
    pub ejection_threshold: f64,
    pub initial_stake: f64,
    pub inactive_ejection_epoch: f64,
    pub semi_active_ejection_epoch: f64,
}

impl Default for LeakParams {
    fn default() -> Self {
        Self {
            penalty_scale: PENALTY_SCALE,
            ejection_threshold: EJECTION_THRESHOLD,
            initial_stake: INITIAL_STAKE,
            inactive_ejection_epoch: INACTIVE_EJECTION_EPOCH,
            semi_active_ejection_epoch: SEMI_ACTIVE_EJECTION_EPOCH,
        }
    }
}

impl LeakParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.penalty_scale.is_finite() && self.penalty_scale > 0.0) {
            return Err(LeakError::InvalidParameter {
                name: "penalty_scale",
                value: self.penalty_scale,
                reason: "must be positive",
            });
        }
        if !(self.ejection_threshold > 0.0 && self.ejection_threshold <= self.initial_stake) {
            return Err(LeakError::InvalidParameter {
                name: "ejection_threshold",
                value: self.ejection_threshold,
                reason: "must lie in (0, initial_stake]",
            });
        }
        if self
            .inactive_ejection_epoch
            .partial_cmp(&self.semi_active_ejection_epoch)
            != Some(std::cmp::Ordering::Less)
        {
            return Err(LeakError::InvalidParameter {
                name: "inactive_ejection_epoch",
                value: self.inactive_ejection_epoch,
                reason: "must precede semi_active_ejection_epoch",
            });
        }
        Ok(())
    }

    /// Stake an always-inactive validator holds at the published ejection
    /// epoch (about 16.64 ETH). Using it as an ejection threshold makes a
    /// discrete simulation eject inactive validators at that epoch.
    pub fn canonical_ejection_stake(&self) -> f64 {
        let c = BehaviorKind::Inactive.decay_coefficient(self.penalty_scale);
        self.initial_stake * (-c * self.inactive_ejection_epoch.powi(2)).exp()
    }

    fn inactive_decay(&self, t: f64) -> f64 {
        (-BehaviorKind::Inactive.decay_coefficient(self.penalty_scale) * t * t).exp()
    }

    fn semi_active_decay(&self, t: f64) -> f64 {
        (-BehaviorKind::SemiActive.decay_coefficient(self.penalty_scale) * t * t).exp()
    }
}

/// How honest and Byzantine stake is split when a partition starts.
///
/// `p0` is the fraction of honest stake on the branch under consideration,
/// `beta0` the Byzantine fraction of total stake.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionSplit {
    pub p0: f64,
    pub beta0: f64,
}

impl PartitionSplit {
    pub fn new(p0: f64, beta0: f64) -> Result<Self> {
        check_proportion("p0", p0)?;
        check_byzantine_share("beta0", beta0)?;
        Ok(Self { p0, beta0 })
    }

    /// The split seen from the other branch.
    pub fn mirrored(self) -> Self {
        Self {
            p0: 1.0 - self.p0,
            beta0: self.beta0,
        }
    }

    /// The branch with fewer honest validators finalizes last.
    pub fn slower_branch(self) -> Self {
        if self.p0 <= 0.5 {
            self
        } else {
            self.mirrored()
        }
    }

    fn honest_active(self) -> f64 {
        self.p0 * (1.0 - self.beta0)
    }

    fn honest_inactive(self) -> f64 {
        (1.0 - self.p0) * (1.0 - self.beta0)
    }
}

/// Time at which a branch regains a two-thirds active supermajority.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinalizationTime {
    pub epochs: f64,
    /// The supermajority is only reached through ejection of inactive validators.
    pub capped: bool,
}

impl FinalizationTime {
    fn immediate() -> Self {
        Self {
            epochs: 0.0,
            capped: false,
        }
    }

    fn capped_at(radicand: f64, cap: f64) -> Self {
        let t = radicand.max(0.0).sqrt();
        if t >= cap {
            Self {
                epochs: cap,
                capped: true,
            }
        } else {
            Self {
                epochs: t,
                capped: false,
            }
        }
    }

    /// First whole epoch at or after the crossing.
    pub fn whole_epochs(&self) -> u64 {
        self.epochs.ceil() as u64
    }
}

/// Stake of a validator with the given behavior after `t` epochs of leak.
/// Not clamped at the ejection threshold.
pub fn stake_at(behavior: BehaviorKind, t: f64, params: &LeakParams) -> Result<f64> {
    check_time(t)?;
    let c = behavior.decay_coefficient(params.penalty_scale);
    Ok(params.initial_stake * (-c * t * t).exp())
}

/// Closed-form inversion of [`stake_at`] at the ejection threshold.
///
/// This is the exact crossing of the continuous curve. It differs from the
/// published ejection epochs stored in [`LeakParams`] (about 4661 vs 4685 and
/// 7611 vs 7652); both are reported side by side by the CLI.
pub fn ejection_epoch(behavior: BehaviorKind, params: &LeakParams) -> Result<f64> {
    if behavior == BehaviorKind::Active {
        return Err(LeakError::NeverEjected);
    }
    params.validate()?;
    let c = behavior.decay_coefficient(params.penalty_scale);
    let log_ratio = (params.initial_stake / params.ejection_threshold).ln();
    Ok((log_ratio / c).sqrt())
}

/// Fraction of active stake on a branch holding `p0` of the honest validators.
pub fn active_ratio_honest(p0: f64, t: f64) -> Result<f64> {
    active_ratio_honest_with(p0, t, &LeakParams::default())
}

pub fn active_ratio_honest_with(p0: f64, t: f64, params: &LeakParams) -> Result<f64> {
    check_proportion("p0", p0)?;
    check_time(t)?;
    Ok(p0 / (p0 + (1.0 - p0) * params.inactive_decay(t)))
}

/// Time for a branch with honest share `p0` to reach 2/3 active stake.
/// Returns zero for `p0 >= 2/3`.
pub fn time_to_finalize_honest(p0: f64, params: &LeakParams) -> Result<FinalizationTime> {
    check_proportion("p0", p0)?;
    if p0 >= TWO_THIRDS {
        return Ok(FinalizationTime::immediate());
    }
    let radicand = params.penalty_scale / 2.0 * ((2.0 * (1.0 - p0)).ln() - p0.ln());
    Ok(FinalizationTime::capped_at(radicand, params.inactive_ejection_epoch))
}

/// Active ratio when Byzantine validators are active on both branches.
pub fn active_ratio_slashable(split: PartitionSplit, t: f64) -> Result<f64> {
    active_ratio_slashable_with(split, t, &LeakParams::default())
}

pub fn active_ratio_slashable_with(split: PartitionSplit, t: f64, params: &LeakParams) -> Result<f64> {
    check_time(t)?;
    let active = split.honest_active() + split.beta0;
    Ok(active / (active + split.honest_inactive() * params.inactive_decay(t)))
}

/// Closed-form time to 2/3 with Byzantine validators active on both branches,
/// evaluated on the branch described by `split`. Zero when already finalizable.
pub fn time_to_finalize_slashable(split: PartitionSplit, params: &LeakParams) -> Result<FinalizationTime> {
    let active = split.honest_active() + split.beta0;
    if active >= TWO_THIRDS {
        return Ok(FinalizationTime::immediate());
    }
    let byz_term = split.p0 + split.beta0 / (1.0 - split.beta0);
    let radicand = params.penalty_scale / 2.0 * ((2.0 * (1.0 - split.p0)).ln() - byz_term.ln());
    Ok(FinalizationTime::capped_at(radicand, params.inactive_ejection_epoch))
}

/// Active ratio when Byzantine validators alternate between branches.
pub fn active_ratio_semi_active(split: PartitionSplit, t: f64) -> Result<f64> {
    active_ratio_semi_active_with(split, t, &LeakParams::default())
}

pub fn active_ratio_semi_active_with(split: PartitionSplit, t: f64, params: &LeakParams) -> Result<f64> {
    check_time(t)?;
    let active = split.honest_active() + split.beta0 * params.semi_active_decay(t);
    Ok(active / (active + split.honest_inactive() * params.inactive_decay(t)))
}

/// Time to 2/3 with semi-active Byzantine validators, by bisection
/// (tolerance 1e-6 epochs, at most 200 iterations).
///
/// When 2/3 is not reached before the inactive-ejection epoch the result is
/// that epoch with `capped` set.
pub fn time_to_finalize_semi_active(split: PartitionSplit, params: &LeakParams) -> Result<FinalizationTime> {
    let cap = params.inactive_ejection_epoch;
    let ratio = |t: f64| active_ratio_semi_active_with(split, t, params).unwrap_or(0.0);
    if ratio(0.0) >= TWO_THIRDS {
        return Ok(FinalizationTime::immediate());
    }
    Ok(
        match bisect_first_true(0.0, cap, BISECTION_TOLERANCE, BISECTION_MAX_ITERATIONS, |t| {
            ratio(t) >= TWO_THIRDS
        }) {
            Some(c) => FinalizationTime {
                epochs: c.at,
                capped: false,
            },
            None => FinalizationTime {
                epochs: cap,
                capped: true,
            },
        },
    )
}

/// Bisection on [`active_ratio_slashable`]; the independent route for the closed form.
pub fn time_to_finalize_slashable_bisection(split: PartitionSplit, params: &LeakParams) -> Result<FinalizationTime> {
    let cap = params.inactive_ejection_epoch;
    let ratio = |t: f64| active_ratio_slashable_with(split, t, params).unwrap_or(0.0);
    if ratio(0.0) >= TWO_THIRDS {
        return Ok(FinalizationTime::immediate());
    }
    Ok(
        match bisect_first_true(0.0, cap, BISECTION_TOLERANCE, BISECTION_MAX_ITERATIONS, |t| {
            ratio(t) >= TWO_THIRDS
        }) {
            Some(c) => FinalizationTime {
                epochs: c.at,
                capped: false,
            },
            None => FinalizationTime {
                epochs: cap,
                capped: true,
            },
        },
    )
}

/// Conflicting finalization needs both branches: the later of the two.
pub fn conflicting_finalization_slashable(split: PartitionSplit, params: &LeakParams) -> Result<FinalizationTime> {
    time_to_finalize_slashable(split.slower_branch(), params)
}

pub fn conflicting_finalization_semi_active(split: PartitionSplit, params: &LeakParams) -> Result<FinalizationTime> {
    time_to_finalize_semi_active(split.slower_branch(), params)
}

/// Byzantine share of total stake on a branch when Byzantine validators are
/// semi-active and the other honest validators inactive.
pub fn byz_proportion(split: PartitionSplit, t: f64) -> Result<f64> {
    byz_proportion_with(split, t, &LeakParams::default())
}

pub fn byz_proportion_with(split: PartitionSplit, t: f64, params: &LeakParams) -> Result<f64> {
    check_time(t)?;
    let byz = split.beta0 * params.semi_active_decay(t);
    Ok(byz / (split.honest_active() + split.honest_inactive() * params.inactive_decay(t) + byz))
}

/// Byzantine share right after the inactive honest validators are ejected.
pub fn byz_max_proportion(split: PartitionSplit, params: &LeakParams) -> Result<f64> {
    let byz = split.beta0 * params.semi_active_decay(params.inactive_ejection_epoch);
    Ok(byz / (split.honest_active() + byz))
}

/// Smallest `beta0` for which [`byz_max_proportion`] reaches 1/3.
///
/// Solving `b E / (p0 (1 - b) + b E) = 1/3` for `b` gives `b = p0 / (p0 + 2E)`
/// with `E` the semi-active decay factor at the inactive-ejection epoch.
pub fn min_beta_for_threshold(p0: f64, params: &LeakParams) -> Result<f64> {
    check_proportion("p0", p0)?;
    let decay = params.semi_active_decay(params.inactive_ejection_epoch);
    Ok(p0 / (p0 + 2.0 * decay))
}

//! A single validator leaking on a branch that never finalizes.

use super::*;
use crate::leak_math::BehaviorKind;

/// Per-epoch stake of the watched validator, from epoch 0 (the first leak
/// epoch), and the epoch it was ejected.
#[derive(Debug, Clone, PartialEq)]
pub struct LeakTrajectory {
    pub stakes: Vec<f64>,
    pub ejected_at: Option<i64>,
}

impl LeakTrajectory {
    /// Stake at the end of leak epoch `e`, zero once ejected.
    pub fn stake_at(&self, e: usize) -> f64 {
        self.stakes.get(e).copied().unwrap_or(0.0)
    }
}

/// Steps one branch through epoch `last` with a lone validator whose activity
/// follows `behavior`. Semi-active means active on even epochs. A large silent
/// cohort keeps the branch from ever justifying.
pub fn leak_trajectory(model: &dyn StakeAccounting, behavior: BehaviorKind, last: i64) -> Result<LeakTrajectory> {
    leak_trajectory_with(model, |e| behavior_active(behavior, e), last)
}

fn behavior_active(behavior: BehaviorKind, e: i64) -> bool {
    match behavior {
        BehaviorKind::Active => true,
        BehaviorKind::SemiActive => e.rem_euclid(2) == 0,
        BehaviorKind::Inactive => false,
    }
}

/// As [`leak_trajectory`] with an arbitrary activity pattern.
pub fn leak_trajectory_with(
    model: &dyn StakeAccounting,
    active: impl Fn(i64) -> bool,
    last: i64,
) -> Result<LeakTrajectory> {
    let watched = CohortId(0);
    let cohorts = vec![
        ValidatorCohort::honest(watched, "watched", 1),
        ValidatorCohort::honest(CohortId(1), "silent", 1_000_000),
    ];
    let mut branch = BranchView::new(BranchId(1), Checkpoint::new(BranchId::TRUNK, -5), cohorts);
    let mut stakes = Vec::with_capacity(last.max(0) as usize + 1);
    let mut ejected_at = None;
    for e in -4..=last {
        branch.open_epoch(e);
        let on = !branch.cohorts[0].ejected && active(e);
        let set: ActiveSet = if on {
            [watched].into_iter().collect()
        } else {
            ActiveSet::default()
        };
        let votes = set
            .iter()
            .map(|id| branch.vote_for(id, e))
            .collect::<Result<Vec<_>>>()?;
        for ev in branch.process_epoch(e, &votes, &set, model)? {
            if matches!(ev.kind, EventKind::Ejected { cohort, .. } if cohort == watched) {
                ejected_at = Some(e);
            }
        }
        if e >= 0 {
            stakes.push(branch.cohorts[0].stake);
        }
        if ejected_at.is_some() {
            break;
        }
    }
    Ok(LeakTrajectory { stakes, ejected_at })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn active_validator_keeps_full_stake() {
        let t = leak_trajectory(&BalanceAccounting::default(), BehaviorKind::Active, 200).unwrap();
        assert_eq!(t.stakes.len(), 201);
        assert!(t.stakes.iter().all(|&s| s == 32.0));
        assert_eq!(t.ejected_at, None);
    }

    #[test]
    fn ejected_stake_reads_as_zero() {
        let t = leak_trajectory(
            &BalanceAccounting {
                ejection_threshold: 31.0,
            },
            BehaviorKind::Inactive,
            2000,
        )
        .unwrap();
        let e = t.ejected_at.unwrap() as usize;
        assert!(t.stake_at(e - 1) > 31.0);
        assert_eq!(t.stake_at(e + 1), 0.0);
    }
}

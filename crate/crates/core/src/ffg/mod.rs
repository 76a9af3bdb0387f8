//! Per-epoch checkpoint-finality state machine with inactivity-leak accounting.
//!
//! A [`BranchView`] is one branch of a fork together with its own view of the
//! validator registry. Each epoch is processed in a fixed order:
//!
//! 1. votes are collected by the caller;
//! 2. they are tallied and the epoch's checkpoint justified on a > 2/3 link;
//! 3. the previous checkpoint is finalized if this justification used it as source;
//! 4. the leak flag is recomputed (leak iff more than 4 epochs since the last finalization);
//! 5. during the leak, penalties are charged with the score from the previous epoch;
//! 6. inactivity scores are updated;
//! 7. cohorts whose stake fell to the ejection level are removed.

mod accounting;
mod slashing;
mod trajectory;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::json;

pub use accounting::{AccountingRegistry, BalanceAccounting, EffectiveBalanceAccounting, StakeAccounting};
pub use slashing::{SlashingEvidence, VoteArchive};
pub use trajectory::{leak_trajectory, leak_trajectory_with, LeakTrajectory};

use crate::error::{LeakError, Result};
use crate::leak_math::{INITIAL_STAKE, PENALTY_SCALE};

/// Epochs without finalization after which the leak starts.
pub const LEAK_DELAY: i64 = 4;
pub const INACTIVE_SCORE_INCREMENT: u64 = 4;
pub const ACTIVE_SCORE_DECREMENT: u64 = 1;
/// Extra score recovery applied to everyone while the leak is off.
pub const SCORE_RECOVERY: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BranchId(pub u32);

impl BranchId {
    /// The common chain before the fork.
    pub const TRUNK: BranchId = BranchId(0);
}

impl std::fmt::Display for BranchId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CohortId(pub u32);

impl CohortId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BlockId(pub u64);

/// First block of an epoch on a given branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Checkpoint {
    pub branch: BranchId,
    pub epoch: i64,
    pub block: BlockId,
}

impl Checkpoint {
    pub fn new(branch: BranchId, epoch: i64) -> Self {
        let mut z = ((branch.0 as u64) << 40) ^ (epoch as u64).wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        Self {
            branch,
            epoch,
            block: BlockId(z ^ (z >> 31)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckpointVote {
    pub voter: CohortId,
    pub epoch: i64,
    pub source: Checkpoint,
    pub target: Checkpoint,
    /// Total stake behind the vote at the time it was cast.
    pub weight: f64,
}

/// Validators sharing behavior, per-validator stake and inactivity score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidatorCohort {
    pub id: CohortId,
    pub label: String,
    pub count: u64,
    /// Balance of each validator in the cohort.
    pub stake: f64,
    pub effective_balance: f64,
    pub inactivity_score: u64,
    pub is_byzantine: bool,
    pub ejected: bool,
    pub slashed: bool,
}

impl ValidatorCohort {
    pub fn honest(id: CohortId, label: impl Into<String>, count: u64) -> Self {
        Self {
            id,
            label: label.into(),
            count,
            stake: INITIAL_STAKE,
            effective_balance: INITIAL_STAKE,
            inactivity_score: 0,
            is_byzantine: false,
            ejected: false,
            slashed: false,
        }
    }

    pub fn byzantine(id: CohortId, label: impl Into<String>, count: u64) -> Self {
        Self {
            is_byzantine: true,
            ..Self::honest(id, label, count)
        }
    }

    /// Stake counted in tallies; zero once ejected.
    pub fn total_stake(&self) -> f64 {
        if self.ejected {
            0.0
        } else {
            self.count as f64 * self.stake
        }
    }
}

/// Cohorts active on a branch during one epoch, indexed by [`CohortId`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ActiveSet {
    members: Vec<bool>,
}

impl ActiveSet {
    pub fn with_capacity(cohorts: usize) -> Self {
        Self {
            members: vec![false; cohorts],
        }
    }

    pub fn insert(&mut self, id: CohortId) {
        if id.index() >= self.members.len() {
            self.members.resize(id.index() + 1, false);
        }
        self.members[id.index()] = true;
    }

    pub fn contains(&self, id: CohortId) -> bool {
        self.members.get(id.index()).copied().unwrap_or(false)
    }

    pub fn iter(&self) -> impl Iterator<Item = CohortId> + '_ {
        self.members
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| CohortId(i as u32))
    }
}

impl FromIterator<CohortId> for ActiveSet {
    fn from_iter<I: IntoIterator<Item = CohortId>>(iter: I) -> Self {
        let mut s = Self::default();
        for id in iter {
            s.insert(id);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EventKind {
    Justified {
        checkpoint: Checkpoint,
        source: Checkpoint,
    },
    Finalized {
        checkpoint: Checkpoint,
    },
    Ejected {
        cohort: CohortId,
        label: String,
        stake: f64,
    },
    Slashed {
        cohort: CohortId,
        label: String,
        burned: f64,
    },
    LeakStart,
    LeakEnd,
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Justified { .. } => "justified",
            Self::Finalized { .. } => "finalized",
            Self::Ejected { .. } => "ejected",
            Self::Slashed { .. } => "slashed",
            Self::LeakStart => "leak_start",
            Self::LeakEnd => "leak_end",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolEvent {
    pub epoch: i64,
    pub branch: BranchId,
    pub kind: EventKind,
}

impl ProtocolEvent {
    /// One JSON-lines record: `{epoch, branch, event, payload}`.
    pub fn to_json_line(&self) -> String {
        let payload = match &self.kind {
            EventKind::Justified { checkpoint, source } => json!({
                "target_epoch": checkpoint.epoch,
                "source_epoch": source.epoch,
                "block": checkpoint.block.0,
            }),
            EventKind::Finalized { checkpoint } => json!({
                "checkpoint_epoch": checkpoint.epoch,
                "block": checkpoint.block.0,
            }),
            EventKind::Ejected { cohort, label, stake } => json!({
                "cohort": cohort.0,
                "label": label,
                "stake": stake,
            }),
            EventKind::Slashed { cohort, label, burned } => json!({
                "cohort": cohort.0,
                "label": label,
                "burned": burned,
            }),
            EventKind::LeakStart | EventKind::LeakEnd => json!({}),
        };
        json!({
            "epoch": self.epoch,
            "branch": self.branch.0,
            "event": self.kind.name(),
            "payload": payload,
        })
        .to_string()
    }
}

/// One branch of the chain and its view of the validator registry.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchView {
    pub id: BranchId,
    checkpoints: BTreeMap<i64, Checkpoint>,
    /// Justified target epoch -> source epoch of the justifying link.
    justified: BTreeMap<i64, i64>,
    finalized: BTreeSet<i64>,
    pub finalized_epoch: i64,
    pub last_justified_epoch: i64,
    /// Wall epoch of the most recent finalization event.
    pub last_finalization_epoch: i64,
    pub cohorts: Vec<ValidatorCohort>,
    pub leak_active: bool,
    pub penalty_scale: f64,
}

impl BranchView {
    /// A branch whose history starts at a finalized `anchor`.
    pub fn new(id: BranchId, anchor: Checkpoint, cohorts: Vec<ValidatorCohort>) -> Self {
        debug_assert!(cohorts.iter().enumerate().all(|(i, c)| c.id.index() == i));
        Self {
            id,
            checkpoints: BTreeMap::from([(anchor.epoch, anchor)]),
            justified: BTreeMap::from([(anchor.epoch, anchor.epoch)]),
            finalized: BTreeSet::from([anchor.epoch]),
            finalized_epoch: anchor.epoch,
            last_justified_epoch: anchor.epoch,
            last_finalization_epoch: anchor.epoch,
            cohorts,
            leak_active: false,
            penalty_scale: PENALTY_SCALE,
        }
    }

    /// Creates this branch's checkpoint for `epoch` if it does not exist yet.
    pub fn open_epoch(&mut self, epoch: i64) -> Checkpoint {
        let id = self.id;
        *self
            .checkpoints
            .entry(epoch)
            .or_insert_with(|| Checkpoint::new(id, epoch))
    }

    pub fn checkpoint_at(&self, epoch: i64) -> Option<Checkpoint> {
        self.checkpoints.get(&epoch).copied()
    }

    /// Whether `cp` lies on this branch's chain.
    pub fn contains(&self, cp: &Checkpoint) -> bool {
        self.checkpoints.get(&cp.epoch) == Some(cp)
    }

    pub fn is_justified(&self, epoch: i64) -> bool {
        self.justified.contains_key(&epoch)
    }

    pub fn is_finalized(&self, epoch: i64) -> bool {
        self.finalized.contains(&epoch)
    }

    pub fn justified_epochs(&self) -> impl Iterator<Item = i64> + '_ {
        self.justified.keys().copied()
    }

    pub fn finalized_epochs(&self) -> impl Iterator<Item = i64> + '_ {
        self.finalized.iter().copied()
    }

    pub fn latest_finalized(&self) -> Checkpoint {
        self.checkpoints[&self.finalized_epoch]
    }

    pub fn last_justified(&self) -> Checkpoint {
        self.checkpoints[&self.last_justified_epoch]
    }

    pub fn cohort(&self, id: CohortId) -> Result<&ValidatorCohort> {
        self.cohorts.get(id.index()).ok_or(LeakError::UnknownCohort(id))
    }

    /// Stake of every non-ejected cohort, active or not.
    pub fn total_stake(&self) -> f64 {
        stake_sum(self.cohorts.iter().map(ValidatorCohort::total_stake))
    }

    pub fn byzantine_stake(&self) -> f64 {
        stake_sum(
            self.cohorts
                .iter()
                .filter(|c| c.is_byzantine)
                .map(ValidatorCohort::total_stake),
        )
    }

    /// Stake of the cohorts in `active`.
    pub fn active_stake(&self, active: &ActiveSet) -> f64 {
        stake_sum(
            active
                .iter()
                .filter_map(|id| self.cohorts.get(id.index()))
                .map(ValidatorCohort::total_stake),
        )
    }

    /// Vote for this epoch's checkpoint from the last justified one.
    pub fn vote_for(&self, voter: CohortId, epoch: i64) -> Result<CheckpointVote> {
        let cohort = self.cohort(voter)?;
        if cohort.ejected {
            return Err(LeakError::EjectedCohort(voter));
        }
        let target = self.checkpoint_at(epoch).ok_or(LeakError::ForeignVote {
            branch: self.id.0,
            reason: "epoch has no checkpoint on this branch",
        })?;
        Ok(CheckpointVote {
            voter,
            epoch,
            source: self.last_justified(),
            target,
            weight: cohort.total_stake(),
        })
    }

    /// Justifies the target of a link backed by more than 2/3 of the stake.
    pub fn tally_and_justify(&mut self, votes: &[CheckpointVote], epoch: i64) -> Result<Option<ProtocolEvent>> {
        let mut seen = vec![false; self.cohorts.len()];
        let mut links: BTreeMap<(i64, i64), f64> = BTreeMap::new();
        for v in votes {
            let cohort = self.cohort(v.voter)?;
            if cohort.ejected {
                return Err(LeakError::EjectedCohort(v.voter));
            }
            if std::mem::replace(&mut seen[v.voter.index()], true) {
                return Err(LeakError::DuplicateVote {
                    cohort: v.voter,
                    epoch,
                    branch: self.id.0,
                });
            }
            if v.epoch != epoch || v.target.epoch != epoch {
                return Err(LeakError::ForeignVote {
                    branch: self.id.0,
                    reason: "target is not this epoch's checkpoint",
                });
            }
            if !self.contains(&v.target) || !self.contains(&v.source) {
                return Err(LeakError::ForeignVote {
                    branch: self.id.0,
                    reason: "source or target is not on this branch",
                });
            }
            if v.source.epoch >= v.target.epoch {
                return Err(LeakError::ForeignVote {
                    branch: self.id.0,
                    reason: "source must precede target",
                });
            }
            *links.entry((v.source.epoch, v.target.epoch)).or_default() += v.weight;
        }
        let threshold = 2.0 / 3.0 * self.total_stake();
        let Some((&(source, target), _)) = links.iter().find(|(_, &w)| w > threshold) else {
            return Ok(None);
        };
        if self.justified.contains_key(&target) {
            return Ok(None);
        }
        self.justified.insert(target, source);
        self.last_justified_epoch = self.last_justified_epoch.max(target);
        Ok(Some(ProtocolEvent {
            epoch,
            branch: self.id,
            kind: EventKind::Justified {
                checkpoint: self.checkpoints[&target],
                source: self.checkpoints[&source],
            },
        }))
    }

    /// Finalizes `epoch - 1` when `epoch` was justified from it.
    pub fn finalize(&mut self, epoch: i64) -> Option<ProtocolEvent> {
        let prev = epoch - 1;
        let linked = self.justified.get(&epoch) == Some(&prev) && self.justified.contains_key(&prev);
        if !linked || self.finalized.contains(&prev) {
            return None;
        }
        self.finalized.insert(prev);
        self.finalized_epoch = self.finalized_epoch.max(prev);
        self.last_finalization_epoch = epoch;
        Some(ProtocolEvent {
            epoch,
            branch: self.id,
            kind: EventKind::Finalized {
                checkpoint: self.checkpoints[&prev],
            },
        })
    }

    /// Recomputes the leak flag for `epoch`; reports transitions.
    pub fn refresh_leak(&mut self, epoch: i64) -> Option<ProtocolEvent> {
        let leak = epoch - self.last_finalization_epoch > LEAK_DELAY;
        if leak == self.leak_active {
            return None;
        }
        self.leak_active = leak;
        Some(ProtocolEvent {
            epoch,
            branch: self.id,
            kind: if leak { EventKind::LeakStart } else { EventKind::LeakEnd },
        })
    }

    /// Charges one epoch of leak penalty to every non-ejected cohort.
    pub fn apply_penalties(&mut self, model: &dyn StakeAccounting) -> Result<()> {
        if !self.leak_active {
            return Err(LeakError::LeakInactive);
        }
        let scale = self.penalty_scale;
        for c in self.cohorts.iter_mut().filter(|c| !c.ejected) {
            model.penalize(c, scale);
        }
        Ok(())
    }

    /// +4 for inactive cohorts, -1 (floored at zero) for active ones; outside
    /// the leak every score then drops by a further 16, floored at zero.
    pub fn update_inactivity_scores(&mut self, active: &ActiveSet, leak: bool) -> Result<()> {
        for id in active.iter() {
            if self.cohort(id)?.ejected {
                return Err(LeakError::EjectedCohort(id));
            }
        }
        for c in self.cohorts.iter_mut().filter(|c| !c.ejected) {
            c.inactivity_score = if active.contains(c.id) {
                c.inactivity_score.saturating_sub(ACTIVE_SCORE_DECREMENT)
            } else {
                c.inactivity_score + INACTIVE_SCORE_INCREMENT
            };
            if !leak {
                c.inactivity_score = c.inactivity_score.saturating_sub(SCORE_RECOVERY);
            }
        }
        Ok(())
    }

    /// Removes cohorts the accounting model considers below the ejection level.
    pub fn eject(&mut self, model: &dyn StakeAccounting, epoch: i64) -> Vec<ProtocolEvent> {
        let branch = self.id;
        self.cohorts
            .iter_mut()
            .filter(|c| !c.ejected && model.should_eject(c))
            .map(|c| {
                c.ejected = true;
                ProtocolEvent {
                    epoch,
                    branch,
                    kind: EventKind::Ejected {
                        cohort: c.id,
                        label: c.label.clone(),
                        stake: c.stake,
                    },
                }
            })
            .collect()
    }

    /// Steps 2-7 of the epoch. The checkpoint for `epoch` must be open.
    pub fn process_epoch(
        &mut self,
        epoch: i64,
        votes: &[CheckpointVote],
        active: &ActiveSet,
        model: &dyn StakeAccounting,
    ) -> Result<Vec<ProtocolEvent>> {
        let mut events = Vec::new();
        events.extend(self.tally_and_justify(votes, epoch)?);
        events.extend(self.finalize(epoch));
        events.extend(self.refresh_leak(epoch));
        if self.leak_active {
            self.apply_penalties(model)?;
        }
        self.update_inactivity_scores(active, self.leak_active)?;
        events.extend(self.eject(model, epoch));
        Ok(events)
    }

    /// Slashes and ejects every offender in `evidence`, burning `fraction` of
    /// its remaining stake. Already-slashed cohorts are left alone.
    pub fn apply_slashing(&mut self, evidence: &[SlashingEvidence], fraction: f64, epoch: i64) -> Vec<ProtocolEvent> {
        let offenders: BTreeSet<CohortId> = evidence.iter().map(|e| e.cohort).collect();
        let branch = self.id;
        offenders
            .into_iter()
            .filter_map(|id| {
                let c = self.cohorts.get_mut(id.index())?;
                if c.slashed {
                    return None;
                }
                let burned = c.stake * fraction;
                c.stake -= burned;
                c.slashed = true;
                c.ejected = true;
                Some(ProtocolEvent {
                    epoch,
                    branch,
                    kind: EventKind::Slashed {
                        cohort: id,
                        label: c.label.clone(),
                        burned,
                    },
                })
            })
            .collect()
    }
}

/// `Iterator::sum` of an empty float sequence is `-0.0`; stakes start at `+0.0`.
fn stake_sum(stakes: impl Iterator<Item = f64>) -> f64 {
    stakes.fold(0.0, |acc, s| acc + s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn anchor() -> Checkpoint {
        Checkpoint::new(BranchId::TRUNK, -5)
    }

    fn branch(cohorts: &[(u64, bool)]) -> BranchView {
        let cs = cohorts
            .iter()
            .enumerate()
            .map(|(i, &(n, byz))| {
                let id = CohortId(i as u32);
                if byz {
                    ValidatorCohort::byzantine(id, format!("c{i}"), n)
                } else {
                    ValidatorCohort::honest(id, format!("c{i}"), n)
                }
            })
            .collect();
        BranchView::new(BranchId(1), anchor(), cs)
    }

    fn step(b: &mut BranchView, epoch: i64, active: &[u32]) -> Vec<ProtocolEvent> {
        b.open_epoch(epoch);
        let set: ActiveSet = active.iter().map(|&i| CohortId(i)).collect();
        let votes: Vec<_> = set.iter().map(|id| b.vote_for(id, epoch).unwrap()).collect();
        b.process_epoch(epoch, &votes, &set, &BalanceAccounting::default())
            .unwrap()
    }

    #[test]
    fn score_update_rules() {
        let mut b = branch(&[(1, false), (1, false)]);
        let active: ActiveSet = [CohortId(1)].into_iter().collect();
        b.update_inactivity_scores(&active, true).unwrap();
        assert_eq!(b.cohorts[0].inactivity_score, 4);
        assert_eq!(b.cohorts[1].inactivity_score, 0);

        b.cohorts[1].inactivity_score = 4;
        b.update_inactivity_scores(&active, true).unwrap();
        assert_eq!(b.cohorts[1].inactivity_score, 3);

        b.cohorts[1].inactivity_score = 10;
        b.update_inactivity_scores(&active, false).unwrap();
        assert_eq!(b.cohorts[1].inactivity_score, 0);

        let unknown: ActiveSet = [CohortId(7)].into_iter().collect();
        assert_eq!(
            b.update_inactivity_scores(&unknown, true),
            Err(LeakError::UnknownCohort(CohortId(7)))
        );
    }

    #[test]
    fn penalties_only_during_leak() {
        let mut b = branch(&[(1, false)]);
        assert_eq!(
            b.apply_penalties(&BalanceAccounting::default()),
            Err(LeakError::LeakInactive)
        );
        b.leak_active = true;
        b.cohorts[0].inactivity_score = 4;
        b.apply_penalties(&BalanceAccounting::default()).unwrap();
        assert_eq!(b.cohorts[0].stake, 32.0 * (1.0 - 4.0 / PENALTY_SCALE));
    }

    #[test]
    fn ejection_is_idempotent() {
        let mut b = branch(&[(1, false), (1, false)]);
        b.cohorts[0].stake = 16.75;
        b.cohorts[1].stake = 16.76;
        let ev = b.eject(&BalanceAccounting::default(), 0);
        assert_eq!(ev.len(), 1);
        assert!(b.cohorts[0].ejected && !b.cohorts[1].ejected);
        assert_eq!(b.total_stake(), 16.76);
        assert!(b.eject(&BalanceAccounting::default(), 1).is_empty());
    }

    #[test]
    fn unanimous_branch_justifies_and_finalizes_every_epoch() {
        let mut b = branch(&[(10, false)]);
        let e0 = step(&mut b, -4, &[0]);
        assert!(matches!(e0[0].kind, EventKind::Justified { .. }));
        let e1 = step(&mut b, -3, &[0]);
        assert!(e1
            .iter()
            .any(|e| matches!(e.kind, EventKind::Finalized { checkpoint } if checkpoint.epoch == -4)));
        for e in -2..10 {
            step(&mut b, e, &[0]);
        }
        assert_eq!(b.finalized_epoch, 8);
        assert!(!b.leak_active);
    }

    #[test]
    fn half_split_never_justifies_and_starts_leak_at_epoch_zero() {
        let mut b = branch(&[(1, false), (1, false)]);
        let mut leak_start = None;
        for e in -4..5 {
            for ev in step(&mut b, e, &[0]) {
                assert!(!matches!(ev.kind, EventKind::Justified { .. }));
                if ev.kind == EventKind::LeakStart {
                    leak_start = Some(ev.epoch);
                }
            }
        }
        assert_eq!(leak_start, Some(0));
    }

    #[test]
    fn byzantine_top_up_stays_below_two_thirds() {
        // 0.335 + 0.33 = 0.665 of the stake.
        let mut b = branch(&[(335, false), (335, false), (330, true)]);
        let ev = step(&mut b, -4, &[0, 2]);
        assert!(ev.is_empty());
    }

    #[test]
    fn every_other_epoch_justification_never_finalizes() {
        let mut b = branch(&[(10, false), (1, false)]);
        for e in -4i64..20 {
            let active: &[u32] = if e.rem_euclid(2) == 0 { &[0] } else { &[] };
            step(&mut b, e, active);
        }
        assert!(b.justified_epochs().filter(|&e| e >= -4).count() >= 10);
        assert_eq!(b.finalized_epoch, -5);
    }

    #[test]
    fn justification_is_strictly_above_two_thirds() {
        let mut b = branch(&[(2, false), (1, false)]);
        let ev = step(&mut b, -4, &[0]);
        assert!(ev.is_empty(), "exactly 2/3 must not justify");
    }

    #[test]
    fn duplicate_vote_is_a_protocol_error() {
        let mut b = branch(&[(1, false)]);
        b.open_epoch(0);
        let v = b.vote_for(CohortId(0), 0).unwrap();
        assert!(matches!(
            b.tally_and_justify(&[v, v], 0),
            Err(LeakError::DuplicateVote { .. })
        ));
    }

    #[test]
    fn foreign_votes_rejected() {
        let mut b = branch(&[(1, false)]);
        b.open_epoch(0);
        let mut v = b.vote_for(CohortId(0), 0).unwrap();
        v.target = Checkpoint::new(BranchId(2), 0);
        assert!(matches!(
            b.tally_and_justify(&[v], 0),
            Err(LeakError::ForeignVote { .. })
        ));
    }

    #[test]
    fn event_json_lines() {
        let ev = ProtocolEvent {
            epoch: 3,
            branch: BranchId(1),
            kind: EventKind::LeakStart,
        };
        assert_eq!(
            ev.to_json_line(),
            r#"{"branch":1,"epoch":3,"event":"leak_start","payload":{}}"#
        );
    }
}

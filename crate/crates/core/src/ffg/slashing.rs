//! Append-only vote archive and double-vote detection.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Checkpoint, CheckpointVote, CohortId};

/// Two votes by the same cohort for distinct targets in the same epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlashingEvidence {
    pub cohort: CohortId,
    pub epoch: i64,
    pub first: Checkpoint,
    pub second: Checkpoint,
}

/// Votes seen by one observer. Evidence is extracted as votes arrive.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VoteArchive {
    votes: Vec<CheckpointVote>,
    first_target: BTreeMap<(CohortId, i64), Checkpoint>,
    evidence: BTreeMap<(CohortId, i64), SlashingEvidence>,
}

impl VoteArchive {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends `vote`; returns evidence if it is the first conflicting vote
    /// for its (cohort, epoch).
    pub fn record(&mut self, vote: CheckpointVote) -> Option<SlashingEvidence> {
        self.votes.push(vote);
        let key = (vote.voter, vote.epoch);
        let prev = *self.first_target.entry(key).or_insert(vote.target);
        if prev == vote.target || self.evidence.contains_key(&key) {
            return None;
        }
        let ev = SlashingEvidence {
            cohort: vote.voter,
            epoch: vote.epoch,
            first: prev,
            second: vote.target,
        };
        self.evidence.insert(key, ev);
        Some(ev)
    }

    pub fn extend<I: IntoIterator<Item = CheckpointVote>>(&mut self, votes: I) -> Vec<SlashingEvidence> {
        votes.into_iter().filter_map(|v| self.record(v)).collect()
    }

    /// Appends every vote of `other`; returns the evidence this uncovers.
    pub fn merge(&mut self, other: &VoteArchive) -> Vec<SlashingEvidence> {
        self.extend(other.votes.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.votes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.votes.is_empty()
    }

    pub fn votes(&self) -> &[CheckpointVote] {
        &self.votes
    }

    /// One piece of evidence per offending (cohort, epoch), ordered by cohort
    /// then epoch.
    pub fn detect_slashing(&self) -> Vec<SlashingEvidence> {
        self.evidence.values().copied().collect()
    }
}

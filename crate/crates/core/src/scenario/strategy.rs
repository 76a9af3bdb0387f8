//! Per-epoch activity of honest and Byzantine cohorts.
//!
//! Byzantine behaviors implement [`ByzantineStrategy`] and are built by name
//! from a [`StrategyRegistry`].

use std::collections::BTreeMap;
use std::fmt::Debug;

use crate::error::{LeakError, Result};
use crate::ffg::{ActiveSet, BranchId, BranchView, CohortId};

use super::config::{FinalizeAt, FinalizeMode, ScenarioConfig, FORK_EPOCH};

pub const BRANCH_A: BranchId = BranchId(1);
pub const BRANCH_B: BranchId = BranchId(2);

fn other(branch: BranchId) -> BranchId {
    if branch == BRANCH_A {
        BRANCH_B
    } else {
        BRANCH_A
    }
}

/// Branch 1 at even epochs, branch 2 at odd ones.
pub fn alternating_branch(epoch: i64) -> BranchId {
    if epoch.rem_euclid(2) == 0 {
        BRANCH_A
    } else {
        BRANCH_B
    }
}

/// Branches an honest cohort living on `home` is active on. Honest
/// validators adopt branch 1 once the partition heals.
pub fn strategy_honest_partitioned(home: BranchId, epoch: i64, gst_epoch: Option<i64>) -> BranchId {
    match gst_epoch {
        Some(g) if epoch >= g => BRANCH_A,
        _ => home,
    }
}

/// What a Byzantine strategy may look at before choosing where to vote.
#[derive(Debug)]
pub struct StrategyContext<'a> {
    pub epoch: i64,
    pub gst_epoch: Option<i64>,
    /// Branch views indexed by `BranchId - 1`.
    pub branches: &'a [BranchView],
    /// Honest cohorts active on each branch this epoch, same indexing.
    pub honest_active: &'a [ActiveSet],
    pub byzantine: CohortId,
    /// Branch the bouncing attack favours this epoch.
    pub favoured: BranchId,
}

impl StrategyContext<'_> {
    fn branch(&self, id: BranchId) -> &BranchView {
        &self.branches[id.0 as usize - 1]
    }

    /// Whether `branch` would justify this epoch with the Byzantine cohort active on it.
    pub fn justifiable_with_byzantine(&self, id: BranchId) -> bool {
        let b = self.branch(id);
        let honest = b.active_stake(&self.honest_active[id.0 as usize - 1]);
        let byz = b.cohorts[self.byzantine.index()].total_stake();
        honest + byz > 2.0 / 3.0 * b.total_stake()
    }

    fn all_finalized_since_fork(&self) -> bool {
        self.branches.iter().all(|b| b.finalized_epoch >= FORK_EPOCH)
    }
}

pub trait ByzantineStrategy: Debug + Send {
    fn name(&self) -> &'static str;

    /// Branches on which the Byzantine cohort votes this epoch.
    fn activity(&mut self, ctx: &StrategyContext<'_>) -> Vec<BranchId>;
}

/// Active on both branches every epoch. Slashable.
#[derive(Debug, Clone, Default)]
pub struct DualActive;

impl ByzantineStrategy for DualActive {
    fn name(&self) -> &'static str {
        "dual-active"
    }

    fn activity(&mut self, _: &StrategyContext<'_>) -> Vec<BranchId> {
        vec![BRANCH_A, BRANCH_B]
    }
}

/// Alternates between the branches; optionally switches to two consecutive
/// epochs on each branch to finalize both.
#[derive(Debug, Clone)]
pub struct SemiActive {
    pub finalize_at: FinalizeAt,
    plan: Vec<BranchId>,
}

impl SemiActive {
    pub fn new(finalize_at: FinalizeAt) -> Self {
        Self {
            finalize_at,
            plan: Vec::new(),
        }
    }
}

impl ByzantineStrategy for SemiActive {
    fn name(&self) -> &'static str {
        match self.finalize_at {
            FinalizeAt::Named(FinalizeMode::Never) => "semi-active-delay",
            _ => "semi-active-finalize",
        }
    }

    fn activity(&mut self, ctx: &StrategyContext<'_>) -> Vec<BranchId> {
        if let Some(b) = self.plan.pop() {
            return vec![b];
        }
        let here = alternating_branch(ctx.epoch);
        let start = match self.finalize_at {
            FinalizeAt::Named(FinalizeMode::Never) => None,
            FinalizeAt::Named(FinalizeMode::Asap) => {
                (!ctx.all_finalized_since_fork() && ctx.justifiable_with_byzantine(here)).then_some(here)
            }
            FinalizeAt::Epoch(k) => (ctx.epoch >= k && !ctx.all_finalized_since_fork()).then_some(BRANCH_A),
        };
        match start {
            Some(first) => {
                // Stored reversed: first, first, other, other.
                self.plan = vec![other(first), other(first), first];
                vec![first]
            }
            None => vec![here],
        }
    }
}

/// Active on the branch the attack favours this epoch.
#[derive(Debug, Clone, Default)]
pub struct Bouncing;

impl ByzantineStrategy for Bouncing {
    fn name(&self) -> &'static str {
        "bouncing"
    }

    fn activity(&mut self, ctx: &StrategyContext<'_>) -> Vec<BranchId> {
        vec![ctx.favoured]
    }
}

type Factory = Box<dyn Fn(&ScenarioConfig) -> Box<dyn ByzantineStrategy> + Send + Sync>;

pub struct StrategyRegistry {
    factories: BTreeMap<&'static str, Factory>,
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register("dual-active", |_| Box::new(DualActive));
        r.register("semi-active-finalize", |cfg| {
            let at = match cfg.finalize_mode() {
                FinalizeAt::Named(FinalizeMode::Never) => FinalizeAt::Named(FinalizeMode::Asap),
                at => at,
            };
            Box::new(SemiActive::new(at))
        });
        r.register("semi-active-delay", |_| {
            Box::new(SemiActive::new(FinalizeAt::Named(FinalizeMode::Never)))
        });
        r.register("bouncing", |_| Box::new(Bouncing));
        r
    }

    pub fn register<F>(&mut self, name: &'static str, factory: F)
    where
        F: Fn(&ScenarioConfig) -> Box<dyn ByzantineStrategy> + Send + Sync + 'static,
    {
        self.factories.insert(name, Box::new(factory));
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(name)
    }

    pub fn create(&self, name: &str, cfg: &ScenarioConfig) -> Result<Box<dyn ByzantineStrategy>> {
        self.factories
            .get(name)
            .map(|f| f(cfg))
            .ok_or_else(|| LeakError::UnknownStrategy {
                kind: "Byzantine strategy",
                name: name.to_owned(),
            })
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.factories.keys().copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn honest_stay_home_until_heal() {
        assert_eq!(strategy_honest_partitioned(BRANCH_B, 10, None), BRANCH_B);
        assert_eq!(strategy_honest_partitioned(BRANCH_B, 10, Some(11)), BRANCH_B);
        assert_eq!(strategy_honest_partitioned(BRANCH_B, 11, Some(11)), BRANCH_A);
        assert_eq!(strategy_honest_partitioned(BRANCH_A, 11, Some(11)), BRANCH_A);
    }

    #[test]
    fn alternation_parity() {
        assert_eq!(alternating_branch(0), BRANCH_A);
        assert_eq!(alternating_branch(-3), BRANCH_B);
        assert_eq!(alternating_branch(7), BRANCH_B);
    }

    #[test]
    fn registry_names() {
        let r = StrategyRegistry::builtin();
        assert_eq!(
            r.names().collect::<Vec<_>>(),
            vec!["bouncing", "dual-active", "semi-active-delay", "semi-active-finalize"]
        );
        let cfg = ScenarioConfig::new(super::super::ScenarioKind::ByzSemiActiveDelay, 0.5, 0.25, 10);
        assert_eq!(r.create("semi-active-delay", &cfg).unwrap().name(), "semi-active-delay");
        assert!(r.create("triple-active", &cfg).is_err());
    }
}

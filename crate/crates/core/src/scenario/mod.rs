//! Partition and bouncing-attack scenarios driven epoch by epoch over two branches.
//!
//! Both branches fork from a finalized ancestor at epoch -5 and are simulated
//! from epoch -4, so the inactivity leak starts at epoch 0. Before the
//! partition heals each branch only sees its own votes; Byzantine cohorts act
//! on both.

mod config;
mod strategy;

use std::fmt::Write as _;
use std::sync::Arc;

use rand::{RngExt, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::Serialize;
use serde_json::json;

pub use config::{
    FinalizeAt, FinalizeMode, ScenarioConfig, ScenarioKind, DEFAULT_BOUNCING_VALIDATORS, DEFAULT_COHORT_RESOLUTION,
    FORK_EPOCH, MAX_BOUNCING_VALIDATORS, MAX_HORIZON,
};
pub use strategy::{
    alternating_branch, strategy_honest_partitioned, Bouncing, ByzantineStrategy, DualActive, SemiActive,
    StrategyContext, StrategyRegistry, BRANCH_A, BRANCH_B,
};

use crate::error::Result;
use crate::ffg::{
    AccountingRegistry, ActiveSet, BranchId, BranchView, Checkpoint, CohortId, EventKind, ProtocolEvent,
    SlashingEvidence, StakeAccounting, ValidatorCohort, VoteArchive,
};
use crate::stats::fmt_f64;

pub const METRICS_HEADER: &str =
    "epoch,branch,active_ratio,byz_share,justified,finalized,safety_violated,byz_over_third";

/// One row per branch per epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochMetrics {
    pub epoch: i64,
    pub branch: BranchId,
    /// Active stake over non-ejected stake, at tally time.
    pub active_ratio: f64,
    /// Byzantine stake over non-ejected stake, at the end of the epoch.
    pub byz_share: f64,
    /// Non-ejected stake at the end of the epoch. Not part of the CSV.
    pub total_stake: f64,
    pub justified: bool,
    pub finalized: bool,
    pub safety_violated: bool,
    pub byz_over_third: bool,
}

impl EpochMetrics {
    /// One line of [`METRICS_HEADER`], without the newline.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.epoch,
            self.branch,
            fmt_f64(self.active_ratio),
            fmt_f64(self.byz_share),
            self.justified as u8,
            self.finalized as u8,
            self.safety_violated as u8,
            self.byz_over_third as u8
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SafetyVerdict {
    pub violated: bool,
    /// Finalized checkpoints of two branches, neither chain a prefix of the other.
    pub witness: Option<(Checkpoint, Checkpoint)>,
    pub epoch_of_violation: Option<i64>,
}

/// Compares the latest finalized checkpoint of every pair of branches.
pub fn check_safety(branches: &[BranchView]) -> SafetyVerdict {
    for (i, a) in branches.iter().enumerate() {
        for b in &branches[i + 1..] {
            let (fa, fb) = (a.latest_finalized(), b.latest_finalized());
            if !b.contains(&fa) && !a.contains(&fb) {
                return SafetyVerdict {
                    violated: true,
                    witness: Some((fa, fb)),
                    epoch_of_violation: None,
                };
            }
        }
    }
    SafetyVerdict::default()
}

/// Per-validator stakes on one branch (bouncing runs); ejected validators read 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StakeSnapshot {
    pub epoch: i64,
    pub branch: BranchId,
    pub stakes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutcome {
    pub config: ScenarioConfig,
    pub metrics: Vec<EpochMetrics>,
    pub events: Vec<ProtocolEvent>,
    pub verdict: SafetyVerdict,
    pub byz_over_third_epoch: Option<i64>,
    pub peak_byz_share: f64,
    /// Evidence with the epoch at which it was applied.
    pub slashing: Vec<(i64, SlashingEvidence)>,
    /// Epoch at which proposer sampling stopped the bouncing attack.
    pub halted_at: Option<i64>,
    /// Bouncing epochs where justification did not land on exactly the favoured branch.
    pub precondition_failures: Vec<i64>,
    pub snapshots: Vec<StakeSnapshot>,
    /// Last simulated epoch.
    pub final_epoch: i64,
    pub ejection_threshold: Option<f64>,
    pub accounting: &'static str,
    pub strategy: Option<&'static str>,
}

impl ScenarioOutcome {
    /// 0 safe, 10 conflicting finalization, 11 Byzantine share above 1/3, 12 both.
    pub fn exit_code(&self) -> i32 {
        match (self.verdict.violated, self.byz_over_third_epoch.is_some()) {
            (false, false) => 0,
            (true, false) => 10,
            (false, true) => 11,
            (true, true) => 12,
        }
    }

    pub fn metrics_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.metrics.len() + 1));
        out.push_str(METRICS_HEADER);
        out.push('\n');
        for m in &self.metrics {
            out.push_str(&m.csv_row());
            out.push('\n');
        }
        out
    }

    pub fn events_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&e.to_json_line());
            out.push('\n');
        }
        out
    }

    pub fn snapshots_csv(&self) -> String {
        let mut out = String::from("epoch,branch,validator,stake\n");
        for s in &self.snapshots {
            for (i, &x) in s.stakes.iter().enumerate() {
                let _ = writeln!(out, "{},{},{i},{}", s.epoch, s.branch, fmt_f64(x));
            }
        }
        out
    }

    /// Sidecar describing the run and its verdict.
    pub fn summary_json(&self) -> serde_json::Value {
        let first_slash = self.slashing.first().map(|(e, _)| *e);
        json!({
            "config": self.config,
            "accounting": self.accounting,
            "byzantine_strategy": self.strategy,
            "ejection_threshold": self.ejection_threshold,
            "exit_code": self.exit_code(),
            "safety_violated": self.verdict.violated,
            "violation_epoch": self.verdict.epoch_of_violation,
            "witness": self.verdict.witness,
            "byz_over_third_epoch": self.byz_over_third_epoch,
            "peak_byz_share": self.peak_byz_share,
            "slashed_offences": self.slashing.len(),
            "first_slashing_epoch": first_slash,
            "halted_at": self.halted_at,
            "precondition_failures": self.precondition_failures.len(),
            "final_epoch": self.final_epoch,
        })
    }

    /// First epoch at which `branch` finalized a checkpoint after the fork.
    pub fn first_finalization(&self, branch: BranchId) -> Option<i64> {
        self.events.iter().find_map(|e| match e.kind {
            EventKind::Finalized { .. } if e.branch == branch => Some(e.epoch),
            _ => None,
        })
    }
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutcome> {
    run_scenario_with(cfg, &AccountingRegistry::builtin(), &StrategyRegistry::builtin())
}

/// Runs `cfg` with caller-supplied registries.
pub fn run_scenario_with(
    cfg: &ScenarioConfig,
    accounting: &AccountingRegistry,
    strategies: &StrategyRegistry,
) -> Result<ScenarioOutcome> {
    cfg.validate()?;
    let threshold = cfg.effective_ejection_threshold();
    let model = accounting.create(&cfg.accounting, threshold)?;
    let strategy = match (cfg.beta0 > 0.0, cfg.strategy_name()) {
        (true, Some(name)) => Some(strategies.create(name, cfg)?),
        _ => None,
    };
    Runner::new(cfg, model, strategy).run(threshold)
}

struct Runner<'a> {
    cfg: &'a ScenarioConfig,
    model: Arc<dyn StakeAccounting>,
    strategy: Option<Box<dyn ByzantineStrategy>>,
    branches: Vec<BranchView>,
    /// Per-branch archives while partitioned.
    archives: Vec<VoteArchive>,
    healed: Option<VoteArchive>,
    pending: Vec<SlashingEvidence>,
    homes: Vec<BranchId>,
    byzantine: Option<CohortId>,
    honest: usize,
    rng: SplitMix64,
    out: ScenarioOutcome,
}

fn rounded(x: f64) -> u64 {
    x.round() as u64
}

impl<'a> Runner<'a> {
    fn new(
        cfg: &'a ScenarioConfig,
        model: Arc<dyn StakeAccounting>,
        strategy: Option<Box<dyn ByzantineStrategy>>,
    ) -> Self {
        let r = cfg.cohort_resolution as f64;
        let (p0, b0) = (cfg.p0, cfg.beta0);
        let mut cohorts = Vec::new();
        let mut homes = Vec::new();
        if cfg.scenario_kind.is_partition() {
            cohorts.push(ValidatorCohort::honest(
                CohortId(0),
                "honest-1",
                rounded(r * p0 * (1.0 - b0)),
            ));
            cohorts.push(ValidatorCohort::honest(
                CohortId(1),
                "honest-2",
                rounded(r * (1.0 - p0) * (1.0 - b0)),
            ));
            homes = vec![BRANCH_A, BRANCH_B];
        } else {
            let n = cfg.bouncing_validators();
            let on_a = rounded(p0 * n as f64);
            for i in 0..n {
                cohorts.push(ValidatorCohort::honest(
                    CohortId(i as u32),
                    format!("honest-{i}"),
                    rounded(r * (1.0 - b0)),
                ));
                homes.push(if i < on_a { BRANCH_A } else { BRANCH_B });
            }
        }
        let honest = cohorts.len();
        let byzantine = (b0 > 0.0).then(|| {
            let id = CohortId(honest as u32);
            // Each bouncing validator carries the weight of a whole honest cohort.
            let per_unit = rounded(r * b0);
            let count = if cfg.scenario_kind.is_partition() {
                per_unit
            } else {
                per_unit * honest as u64
            };
            cohorts.push(ValidatorCohort::byzantine(id, "byzantine", count));
            id
        });
        let anchor = Checkpoint::new(BranchId::TRUNK, FORK_EPOCH - 1);
        let branches = vec![
            BranchView::new(BRANCH_A, anchor, cohorts.clone()),
            BranchView::new(BRANCH_B, anchor, cohorts),
        ];
        Self {
            cfg,
            model,
            strategy,
            branches,
            archives: vec![VoteArchive::new(), VoteArchive::new()],
            healed: None,
            pending: Vec::new(),
            homes,
            byzantine,
            honest,
            rng: SplitMix64::seed_from_u64(cfg.seed),
            out: ScenarioOutcome {
                config: cfg.clone(),
                metrics: Vec::new(),
                events: Vec::new(),
                verdict: SafetyVerdict::default(),
                byz_over_third_epoch: None,
                peak_byz_share: 0.0,
                slashing: Vec::new(),
                halted_at: None,
                precondition_failures: Vec::new(),
                snapshots: Vec::new(),
                final_epoch: FORK_EPOCH,
                ejection_threshold: None,
                accounting: "",
                strategy: None,
            },
        }
    }

    fn bouncing(&self) -> bool {
        !self.cfg.scenario_kind.is_partition()
    }

    /// Partition scenarios without a heal stay split forever; bouncing runs
    /// without one start bouncing right away.
    fn partitioned(&self, epoch: i64) -> bool {
        match self.cfg.gst_epoch {
            Some(g) => epoch < g,
            None => !self.bouncing(),
        }
    }

    fn run(mut self, threshold: Option<f64>) -> Result<ScenarioOutcome> {
        self.out.ejection_threshold = threshold;
        self.out.accounting = self.model.name();
        self.out.strategy = self.strategy.as_ref().map(|s| s.name());
        for epoch in FORK_EPOCH..self.cfg.end_epoch() {
            if self.bouncing() && self.cfg.proposer_sampling && !self.partitioned(epoch) {
                // No Byzantine proposer among the first j slots.
                let p_stop = (1.0 - self.cfg.beta0).powi(self.cfg.j as i32);
                if self.rng.random_bool(p_stop) {
                    self.out.halted_at = Some(epoch);
                    break;
                }
            }
            self.out.final_epoch = epoch;
            if self.step(epoch)? {
                break;
            }
        }
        Ok(self.out)
    }

    fn heal(&mut self, epoch: i64) {
        if self.bouncing() {
            return;
        }
        if self.cfg.gst_epoch.is_some_and(|g| epoch == g + 1) {
            let mut merged = self.archives[0].clone();
            self.pending.extend(merged.merge(&self.archives[1]));
            self.healed = Some(merged);
        }
        if self.pending.is_empty() {
            return;
        }
        let evidence = std::mem::take(&mut self.pending);
        for b in &mut self.branches {
            let events = b.apply_slashing(&evidence, self.cfg.slash_fraction, epoch);
            self.out.events.extend(events);
        }
        self.out.slashing.extend(evidence.into_iter().map(|e| (epoch, e)));
    }

    fn honest_activity(&mut self, epoch: i64, favoured: BranchId) -> [ActiveSet; 2] {
        let mut active = [
            ActiveSet::with_capacity(self.honest),
            ActiveSet::with_capacity(self.honest),
        ];
        let bouncing_now = self.bouncing() && !self.partitioned(epoch);
        for i in 0..self.honest {
            let branch = if bouncing_now {
                if self.rng.random_bool(self.cfg.p0) {
                    favoured
                } else {
                    other(favoured)
                }
            } else {
                strategy_honest_partitioned(self.homes[i], epoch, self.cfg.gst_epoch)
            };
            let k = branch.0 as usize - 1;
            if !self.branches[k].cohorts[i].ejected {
                active[k].insert(CohortId(i as u32));
            }
        }
        active
    }

    /// Processes one epoch; returns true when the run should stop.
    fn step(&mut self, epoch: i64) -> Result<bool> {
        self.heal(epoch);
        let favoured = alternating_branch(epoch);
        let mut active = self.honest_activity(epoch, favoured);
        if let (Some(byz), Some(strategy)) = (self.byzantine, self.strategy.as_mut()) {
            let ctx = StrategyContext {
                epoch,
                gst_epoch: self.cfg.gst_epoch,
                branches: &self.branches,
                honest_active: &active,
                byzantine: byz,
                favoured,
            };
            for b in strategy.activity(&ctx) {
                let k = b.0 as usize - 1;
                if !self.branches[k].cohorts[byz.index()].ejected {
                    active[k].insert(byz);
                }
            }
        }

        let mut justified = [false; 2];
        let mut finalized = [false; 2];
        let mut ratios = [0.0; 2];
        for (k, branch) in self.branches.iter_mut().enumerate() {
            branch.open_epoch(epoch);
            let votes = active[k]
                .iter()
                .map(|id| branch.vote_for(id, epoch))
                .collect::<Result<Vec<_>>>()?;
            if !self.cfg.scenario_kind.is_partition() {
                // Bouncing runs keep no archive: the Byzantine cohort never double-votes.
            } else if let Some(shared) = self.healed.as_mut() {
                self.pending.extend(shared.extend(votes.iter().copied()));
            } else {
                self.archives[k].extend(votes.iter().copied());
            }
            let total = branch.total_stake();
            ratios[k] = if total > 0.0 {
                branch.active_stake(&active[k]) / total
            } else {
                0.0
            };
            let events = branch.process_epoch(epoch, &votes, &active[k], self.model.as_ref())?;
            for e in &events {
                match e.kind {
                    EventKind::Justified { .. } => justified[k] = true,
                    EventKind::Finalized { .. } => finalized[k] = true,
                    _ => {}
                }
            }
            self.out.events.extend(events);
        }

        if !self.out.verdict.violated {
            let v = check_safety(&self.branches);
            if v.violated {
                self.out.verdict = SafetyVerdict {
                    epoch_of_violation: Some(epoch),
                    ..v
                };
            }
        }

        let totals: Vec<f64> = self.branches.iter().map(BranchView::total_stake).collect();
        let shares: Vec<f64> = self
            .branches
            .iter()
            .zip(&totals)
            .map(|(b, &total)| if total > 0.0 { b.byzantine_stake() / total } else { 0.0 })
            .collect();
        let over_third = shares.iter().any(|&s| s > 1.0 / 3.0);
        if over_third && self.out.byz_over_third_epoch.is_none() {
            self.out.byz_over_third_epoch = Some(epoch);
        }
        for (k, b) in self.branches.iter().enumerate() {
            self.out.peak_byz_share = self.out.peak_byz_share.max(shares[k]);
            self.out.metrics.push(EpochMetrics {
                epoch,
                branch: b.id,
                active_ratio: ratios[k],
                byz_share: shares[k],
                total_stake: totals[k],
                justified: justified[k],
                finalized: finalized[k],
                safety_violated: self.out.verdict.violated,
                byz_over_third: over_third,
            });
        }

        if self.bouncing() {
            let fav = favoured.0 as usize - 1;
            if !self.partitioned(epoch) && !(justified[fav] && !justified[1 - fav]) {
                self.out.precondition_failures.push(epoch);
            }
            if self.cfg.snapshot_epochs.contains(&epoch) {
                for b in &self.branches {
                    let stakes = b.cohorts[..self.honest]
                        .iter()
                        .map(|c| if c.ejected { 0.0 } else { c.stake })
                        .collect();
                    self.out.snapshots.push(StakeSnapshot {
                        epoch,
                        branch: b.id,
                        stakes,
                    });
                }
            }
        }

        // The delay scenario ends once every branch has ejected an honest cohort.
        let delay_done = self.cfg.scenario_kind == ScenarioKind::ByzSemiActiveDelay
            && self
                .branches
                .iter()
                .all(|b| b.cohorts[..self.honest].iter().any(|c| c.ejected));
        Ok(delay_done)
    }
}

fn other(branch: BranchId) -> BranchId {
    if branch == BRANCH_A {
        BRANCH_B
    } else {
        BRANCH_A
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn branch_with_final(id: u32, finals: &[i64]) -> BranchView {
        let anchor = Checkpoint::new(BranchId::TRUNK, -5);
        let cohorts = vec![ValidatorCohort::honest(CohortId(0), "h", 1)];
        let mut b = BranchView::new(BranchId(id), anchor, cohorts);
        let model = crate::ffg::BalanceAccounting::default();
        let all: ActiveSet = [CohortId(0)].into_iter().collect();
        let last = finals.iter().copied().max().unwrap_or(-6) + 1;
        for e in -4..=last {
            b.open_epoch(e);
            let votes = if finals.contains(&e) || finals.contains(&(e - 1)) {
                vec![b.vote_for(CohortId(0), e).unwrap()]
            } else {
                vec![]
            };
            let set = if votes.is_empty() {
                ActiveSet::default()
            } else {
                all.clone()
            };
            b.process_epoch(e, &votes, &set, &model).unwrap();
        }
        b
    }

    #[test]
    fn single_finalized_branch_is_safe() {
        let a = branch_with_final(1, &[3]);
        let b = branch_with_final(2, &[]);
        assert!(a.finalized_epoch == 3 && b.finalized_epoch == -5);
        assert!(!check_safety(&[a, b]).violated);
    }

    #[test]
    fn conflicting_finalization_is_violation() {
        let a = branch_with_final(1, &[3]);
        let b = branch_with_final(2, &[3]);
        let v = check_safety(&[a, b]);
        assert!(v.violated);
        let (x, y) = v.witness.unwrap();
        assert_eq!((x.epoch, y.epoch), (3, 3));
        assert_ne!(x.block, y.block);
    }

    #[test]
    fn extension_of_finalized_chain_is_safe() {
        let a = branch_with_final(1, &[3, 6]);
        let mut b = a.clone();
        b.open_epoch(7);
        assert!(!check_safety(&[a, b]).violated);
    }

    #[test]
    fn exit_codes() {
        let cfg = ScenarioConfig::new(ScenarioKind::HonestPartition, 0.5, 0.0, 10);
        let mut out = run_scenario(&cfg).unwrap();
        assert_eq!(out.exit_code(), 0);
        out.verdict.violated = true;
        assert_eq!(out.exit_code(), 10);
        out.byz_over_third_epoch = Some(1);
        assert_eq!(out.exit_code(), 12);
        out.verdict.violated = false;
        assert_eq!(out.exit_code(), 11);
    }

    #[test]
    fn metrics_header_and_rows() {
        let cfg = ScenarioConfig::new(ScenarioKind::HonestPartition, 0.5, 0.0, 3);
        let out = run_scenario(&cfg).unwrap();
        let csv = out.metrics_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(METRICS_HEADER));
        assert_eq!(lines.count(), 2 * 7);
        assert_eq!(out.final_epoch, 2);
    }

    #[test]
    fn rejects_invalid_combinations() {
        let bad = ScenarioConfig::new(ScenarioKind::HonestPartition, 0.5, 0.1, 10);
        assert!(run_scenario(&bad).is_err());
        let bad = ScenarioConfig::new(ScenarioKind::ProbabilisticBouncing, 0.5, 0.2, 10);
        assert!(run_scenario(&bad).is_err());
        let mut bad = ScenarioConfig::new(ScenarioKind::ByzDualActive, 0.5, 0.2, 10);
        bad.accounting = "credit".into();
        assert!(run_scenario(&bad).is_err());
    }
}

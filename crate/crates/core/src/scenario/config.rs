//! Scenario files: one JSON object per run.

use serde::{Deserialize, Serialize};

use crate::bounce_stats::{bouncing_feasible, p0_bounds};
use crate::error::{LeakError, Result};
use crate::ffg::AccountingRegistry;
use crate::leak_math::{LeakParams, EJECTION_THRESHOLD, INITIAL_STAKE};

use super::strategy::StrategyRegistry;

/// First simulated epoch. The common ancestor is finalized at `FORK_EPOCH - 1`
/// and the leak starts at epoch 0.
pub const FORK_EPOCH: i64 = -4;
pub const MAX_HORIZON: u64 = 10_000_000;
pub const DEFAULT_COHORT_RESOLUTION: u64 = 1_000_000;
pub const DEFAULT_BOUNCING_VALIDATORS: u64 = 10_000;
pub const MAX_BOUNCING_VALIDATORS: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    HonestPartition,
    ByzDualActive,
    ByzSemiActiveFinalize,
    ByzSemiActiveDelay,
    ProbabilisticBouncing,
}

impl ScenarioKind {
    pub fn is_partition(self) -> bool {
        self != Self::ProbabilisticBouncing
    }

    pub fn default_strategy(self) -> Option<&'static str> {
        match self {
            Self::HonestPartition => None,
            Self::ByzDualActive => Some("dual-active"),
            Self::ByzSemiActiveFinalize => Some("semi-active-finalize"),
            Self::ByzSemiActiveDelay => Some("semi-active-delay"),
            Self::ProbabilisticBouncing => Some("bouncing"),
        }
    }
}

/// When a semi-active Byzantine cohort switches to finalizing both branches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", untagged)]
pub enum FinalizeAt {
    Epoch(i64),
    Named(FinalizeMode),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinalizeMode {
    /// As soon as the branch it is on can be justified.
    Asap,
    Never,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario_kind: ScenarioKind,
    pub p0: f64,
    #[serde(default)]
    pub beta0: f64,
    /// Epoch at which the partition heals; `None` means never.
    #[serde(default)]
    pub gst_epoch: Option<i64>,
    /// Epochs simulated after the leak starts.
    pub horizon: u64,
    /// Proposer slots per epoch that must contain a Byzantine proposer.
    #[serde(default = "default_j")]
    pub j: u32,
    #[serde(default)]
    pub seed: u64,
    /// Validators represented by a cohort of unit weight.
    #[serde(default = "default_resolution")]
    pub cohort_resolution: u64,
    /// Individually simulated honest validators (bouncing only).
    #[serde(default)]
    pub validators: Option<u64>,
    #[serde(default)]
    pub ejection_threshold: Option<f64>,
    #[serde(default = "default_slash_fraction")]
    pub slash_fraction: f64,
    #[serde(default = "default_accounting")]
    pub accounting: String,
    #[serde(default)]
    pub byzantine_strategy: Option<String>,
    #[serde(default)]
    pub finalize_at: Option<FinalizeAt>,
    /// Halt the bouncing attack when no Byzantine proposer lands in the first `j` slots.
    #[serde(default)]
    pub proposer_sampling: bool,
    /// Epochs at which per-validator stakes are recorded (bouncing only).
    #[serde(default)]
    pub snapshot_epochs: Vec<i64>,
}

fn default_j() -> u32 {
    8
}

fn default_resolution() -> u64 {
    DEFAULT_COHORT_RESOLUTION
}

fn default_slash_fraction() -> f64 {
    1.0 / 32.0
}

fn default_accounting() -> String {
    "balance".to_owned()
}

fn invalid(field: &str, reason: impl Into<String>) -> LeakError {
    LeakError::InvalidConfig {
        field: field.to_owned(),
        reason: reason.into(),
    }
}

impl ScenarioConfig {
    /// Minimal config for `kind`; every optional field at its default.
    pub fn new(kind: ScenarioKind, p0: f64, beta0: f64, horizon: u64) -> Self {
        Self {
            scenario_kind: kind,
            p0,
            beta0,
            gst_epoch: None,
            horizon,
            j: default_j(),
            seed: 0,
            cohort_resolution: default_resolution(),
            validators: None,
            ejection_threshold: None,
            slash_fraction: default_slash_fraction(),
            accounting: default_accounting(),
            byzantine_strategy: None,
            finalize_at: None,
            proposer_sampling: false,
            snapshot_epochs: Vec::new(),
        }
    }

    /// Last simulated epoch, exclusive.
    pub fn end_epoch(&self) -> i64 {
        self.horizon as i64
    }

    pub fn strategy_name(&self) -> Option<&str> {
        self.byzantine_strategy
            .as_deref()
            .or_else(|| self.scenario_kind.default_strategy())
    }

    pub fn finalize_mode(&self) -> FinalizeAt {
        self.finalize_at.unwrap_or(match self.scenario_kind {
            ScenarioKind::ByzSemiActiveFinalize => FinalizeAt::Named(FinalizeMode::Asap),
            _ => FinalizeAt::Named(FinalizeMode::Never),
        })
    }

    pub fn bouncing_validators(&self) -> u64 {
        self.validators.unwrap_or(DEFAULT_BOUNCING_VALIDATORS)
    }

    /// Ejection level handed to the accounting model.
    ///
    /// Partition scenarios with balance accounting default to the stake an
    /// inactive validator holds at the published ejection epoch, so that the
    /// discrete run ejects at that epoch; the bouncing attack uses 16.75.
    pub fn effective_ejection_threshold(&self) -> Option<f64> {
        self.ejection_threshold.or_else(|| {
            (self.accounting == "balance").then(|| {
                if self.scenario_kind.is_partition() {
                    LeakParams::default().canonical_ejection_stake()
                } else {
                    EJECTION_THRESHOLD
                }
            })
        })
    }

    pub fn validate(&self) -> Result<()> {
        let kind = self.scenario_kind;
        if !(self.p0.is_finite() && self.p0 > 0.0 && self.p0 < 1.0) {
            return Err(invalid("p0", "must lie in (0, 1)"));
        }
        if !(self.beta0.is_finite() && (0.0..=1.0 / 3.0).contains(&self.beta0)) {
            return Err(invalid("beta0", "must lie in [0, 1/3]"));
        }
        match kind {
            ScenarioKind::HonestPartition if self.beta0 != 0.0 => {
                return Err(invalid("beta0", "honest_partition requires beta0 = 0"));
            }
            ScenarioKind::HonestPartition => {}
            _ if self.beta0 == 0.0 => {
                return Err(invalid("beta0", "Byzantine scenarios need beta0 > 0"));
            }
            _ => {}
        }
        if kind == ScenarioKind::ProbabilisticBouncing && !bouncing_feasible(self.p0, self.beta0) {
            let (lo, hi) = p0_bounds(self.beta0)?;
            return Err(invalid(
                "p0",
                format!(
                    "bouncing needs p0 strictly inside ({lo:.6}, {hi:.6}) for beta0 = {}",
                    self.beta0
                ),
            ));
        }
        if self.horizon == 0 || self.horizon > MAX_HORIZON {
            return Err(invalid("horizon", format!("must lie in [1, {MAX_HORIZON}]")));
        }
        if self.j == 0 {
            return Err(invalid("j", "must be at least one slot"));
        }
        if self.cohort_resolution == 0 {
            return Err(invalid("cohort_resolution", "must be positive"));
        }
        match (kind, self.validators) {
            (ScenarioKind::ProbabilisticBouncing, Some(n)) if n == 0 || n > MAX_BOUNCING_VALIDATORS => {
                return Err(invalid(
                    "validators",
                    format!("must lie in [1, {MAX_BOUNCING_VALIDATORS}]"),
                ));
            }
            (ScenarioKind::ProbabilisticBouncing, _) | (_, None) => {}
            (_, Some(_)) => return Err(invalid("validators", "only used by probabilistic_bouncing")),
        }
        if let Some(t) = self.ejection_threshold {
            if !(t.is_finite() && t > 0.0 && t < INITIAL_STAKE) {
                return Err(invalid("ejection_threshold", "must lie in (0, 32)"));
            }
        }
        if !(0.0..=1.0).contains(&self.slash_fraction) {
            return Err(invalid("slash_fraction", "must lie in [0, 1]"));
        }
        if let Some(g) = self.gst_epoch {
            if g < FORK_EPOCH {
                return Err(invalid("gst_epoch", format!("must be at least {FORK_EPOCH}")));
            }
        }
        if AccountingRegistry::builtin().create(&self.accounting, None).is_err() {
            return Err(invalid("accounting", format!("unknown model `{}`", self.accounting)));
        }
        if let Some(name) = &self.byzantine_strategy {
            if kind == ScenarioKind::HonestPartition {
                return Err(invalid(
                    "byzantine_strategy",
                    "honest_partition has no Byzantine cohort",
                ));
            }
            if !StrategyRegistry::builtin().contains(name) {
                return Err(invalid("byzantine_strategy", format!("unknown strategy `{name}`")));
            }
        }
        if self.finalize_at.is_some()
            && !matches!(
                kind,
                ScenarioKind::ByzSemiActiveFinalize | ScenarioKind::ByzSemiActiveDelay
            )
        {
            return Err(invalid("finalize_at", "only used by semi-active scenarios"));
        }
        if self.proposer_sampling && kind != ScenarioKind::ProbabilisticBouncing {
            return Err(invalid("proposer_sampling", "only used by probabilistic_bouncing"));
        }
        if !self.snapshot_epochs.is_empty() && kind != ScenarioKind::ProbabilisticBouncing {
            return Err(invalid("snapshot_epochs", "only used by probabilistic_bouncing"));
        }
        if let Some(&e) = self
            .snapshot_epochs
            .iter()
            .find(|&&e| e < FORK_EPOCH || e >= self.end_epoch())
        {
            return Err(invalid(
                "snapshot_epochs",
                format!("epoch {e} outside the simulated range"),
            ));
        }
        Ok(())
    }
}

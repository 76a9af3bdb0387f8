//! Stake-accounting models: how leak penalties hit a cohort and when it is ejected.
//!
//! Models are trait objects looked up by name, so scenario files can pick one
//! at runtime.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::sync::Arc;

use super::ValidatorCohort;
use crate::error::{LeakError, Result};
use crate::leak_math::{EJECTION_THRESHOLD, INITIAL_STAKE};

pub trait StakeAccounting: Debug + Send + Sync {
    fn name(&self) -> &'static str;

    /// Applies one epoch of leak penalty using the score carried over from
    /// the previous epoch.
    fn penalize(&self, cohort: &mut ValidatorCohort, penalty_scale: f64);

    fn should_eject(&self, cohort: &ValidatorCohort) -> bool;
}

/// Penalty `I * s / 2^26` on the balance itself; ejection once the balance is
/// at or below a threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceAccounting {
    pub ejection_threshold: f64,
}

impl Default for BalanceAccounting {
    fn default() -> Self {
        Self {
            ejection_threshold: EJECTION_THRESHOLD,
        }
    }
}

impl StakeAccounting for BalanceAccounting {
    fn name(&self) -> &'static str {
        "balance"
    }

    fn penalize(&self, cohort: &mut ValidatorCohort, penalty_scale: f64) {
        let penalty = cohort.inactivity_score as f64 * cohort.stake / penalty_scale;
        cohort.stake = (cohort.stake - penalty).max(0.0);
    }

    fn should_eject(&self, cohort: &ValidatorCohort) -> bool {
        cohort.stake <= self.ejection_threshold
    }
}

/// Beacon-chain style accounting: penalties are charged on an effective
/// balance that moves in whole-ETH steps with hysteresis, and a validator is
/// ejected once its effective balance drops to the ejection balance. Votes
/// are still weighted by the balance itself.
///
/// The effective balance steps down to `floor(balance)` once the balance
/// falls more than `downward_margin` below it, so ejection at 16 ETH happens
/// when the balance drops below 16.75.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveBalanceAccounting {
    pub ejection_balance: f64,
    pub increment: f64,
    pub downward_margin: f64,
    pub upward_margin: f64,
    pub max_effective_balance: f64,
}

impl Default for EffectiveBalanceAccounting {
    fn default() -> Self {
        Self {
            ejection_balance: 16.0,
            increment: 1.0,
            downward_margin: 0.25,
            upward_margin: 1.25,
            max_effective_balance: INITIAL_STAKE,
        }
    }
}

impl EffectiveBalanceAccounting {
    fn settle(&self, cohort: &mut ValidatorCohort) {
        let b = cohort.stake;
        let eb = cohort.effective_balance;
        if b + self.downward_margin < eb || eb + self.upward_margin < b {
            let stepped = (b / self.increment).floor() * self.increment;
            cohort.effective_balance = stepped.min(self.max_effective_balance);
        }
    }
}

impl StakeAccounting for EffectiveBalanceAccounting {
    fn name(&self) -> &'static str {
        "effective-balance"
    }

    fn penalize(&self, cohort: &mut ValidatorCohort, penalty_scale: f64) {
        let penalty = cohort.inactivity_score as f64 * cohort.effective_balance / penalty_scale;
        cohort.stake = (cohort.stake - penalty).max(0.0);
        self.settle(cohort);
    }

    fn should_eject(&self, cohort: &ValidatorCohort) -> bool {
        cohort.effective_balance <= self.ejection_balance
    }
}

type Factory = Box<dyn Fn(Option<f64>) -> Arc<dyn StakeAccounting> + Send + Sync>;

/// Name-indexed constructors for accounting models. The optional argument
/// overrides the ejection level (a balance for `balance`, an effective
/// balance for `effective-balance`).
pub struct AccountingRegistry {
    factories: BTreeMap<&'static str, Factory>,
}

impl AccountingRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register("balance", |threshold| {
            Arc::new(BalanceAccounting {
                ejection_threshold: threshold.unwrap_or(EJECTION_THRESHOLD),
            })
        });
        r.register("effective-balance", |threshold| {
            let d = EffectiveBalanceAccounting::default();
            Arc::new(EffectiveBalanceAccounting {
                ejection_balance: threshold.unwrap_or(d.ejection_balance),
                ..d
            })
        });
        r
    }

    pub fn register<F>(&mut self, name: &'static str, factory: F)
    where
        F: Fn(Option<f64>) -> Arc<dyn StakeAccounting> + Send + Sync + 'static,
    {
        self.factories.insert(name, Box::new(factory));
    }

    pub fn create(&self, name: &str, threshold: Option<f64>) -> Result<Arc<dyn StakeAccounting>> {
        self.factories
            .get(name)
            .map(|f| f(threshold))
            .ok_or_else(|| LeakError::UnknownStrategy {
                kind: "accounting model",
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
    use crate::ffg::CohortId;
    use crate::leak_math::PENALTY_SCALE;

    fn cohort(stake: f64, score: u64) -> ValidatorCohort {
        let mut c = ValidatorCohort::honest(CohortId(0), "c", 1);
        c.stake = stake;
        c.effective_balance = stake.floor();
        c.inactivity_score = score;
        c
    }

    #[test]
    fn balance_penalty_is_proportional_to_score() {
        let m = BalanceAccounting::default();
        let mut c = cohort(32.0, 0);
        m.penalize(&mut c, PENALTY_SCALE);
        assert_eq!(c.stake, 32.0);
        let mut c = cohort(32.0, 4);
        m.penalize(&mut c, PENALTY_SCALE);
        assert_eq!(c.stake, 32.0 * (1.0 - 4.0 / PENALTY_SCALE));
    }

    #[test]
    fn balance_ejection_boundary() {
        let m = BalanceAccounting::default();
        assert!(m.should_eject(&cohort(16.75, 0)));
        assert!(!m.should_eject(&cohort(16.76, 0)));
    }

    #[test]
    fn effective_balance_hysteresis() {
        let m = EffectiveBalanceAccounting::default();
        let mut c = cohort(32.0, 0);
        c.effective_balance = 32.0;
        c.stake = 31.8;
        m.settle(&mut c);
        assert_eq!(c.effective_balance, 32.0);
        c.stake = 31.7;
        m.settle(&mut c);
        assert_eq!(c.effective_balance, 31.0);

        let mut c = cohort(16.8, 0);
        c.effective_balance = 17.0;
        m.settle(&mut c);
        assert!(!m.should_eject(&c));
        c.stake = 16.74;
        m.settle(&mut c);
        assert_eq!(c.effective_balance, 16.0);
        assert!(m.should_eject(&c));
    }

    #[test]
    fn registry_lookup() {
        let r = AccountingRegistry::builtin();
        assert_eq!(r.names().collect::<Vec<_>>(), vec!["balance", "effective-balance"]);
        assert_eq!(r.create("balance", Some(16.0)).unwrap().name(), "balance");
        assert!(r.create("nope", None).is_err());
    }
}

//! Monte Carlo oracle for the inactivity-score random walk of an honest
//! validator under the bouncing attack.
//!
//! Each trial owns a SplitMix64 stream seeded from `(seed, trial index)`, so
//! the samples do not depend on thread count or scheduling.

use rand::{RngExt, SeedableRng};
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LeakError, Result};
use crate::leak_math::{INITIAL_STAKE, PENALTY_SCALE};
use crate::stats::{histograms_to_csv, Histogram};

/// Which branch the `p0` side of the split is on in a given epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchSchedule {
    /// The favoured branch alternates every epoch, as in the bouncing attack.
    /// Two-epoch increments are +8, +3, -2 with probabilities
    /// `p0 (1 - p0)`, `p0^2 + (1 - p0)^2`, `p0 (1 - p0)`.
    #[default]
    Alternating,
    /// The observed branch is always the favoured one: active with
    /// probability `p0` every epoch.
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub p0: f64,
    pub t_max: u64,
    pub trials: u64,
    pub seed: u64,
    /// Apply the zero floor on the score.
    pub bounded: bool,
    #[serde(default)]
    pub schedule: BranchSchedule,
    /// Epochs at which the distributions are recorded; defaults to `t_max`.
    #[serde(default)]
    pub sample_epochs: Vec<u64>,
}

impl WalkConfig {
    pub fn new(p0: f64, t_max: u64, trials: u64, seed: u64, bounded: bool) -> Self {
        Self {
            p0,
            t_max,
            trials,
            seed,
            bounded,
            schedule: BranchSchedule::Alternating,
            sample_epochs: Vec::new(),
        }
    }

    pub fn with_samples(mut self, epochs: &[u64]) -> Self {
        self.sample_epochs = epochs.to_vec();
        self
    }

    pub fn with_schedule(mut self, schedule: BranchSchedule) -> Self {
        self.schedule = schedule;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p0) {
            return Err(LeakError::InvalidParameter {
                name: "p0",
                value: self.p0,
                reason: "must lie in [0, 1]",
            });
        }
        if self.trials == 0 {
            return Err(LeakError::InvalidParameter {
                name: "trials",
                value: 0.0,
                reason: "need at least one trial",
            });
        }
        if self.t_max < 2 {
            return Err(LeakError::InvalidParameter {
                name: "t_max",
                value: self.t_max as f64,
                reason: "must be at least 2",
            });
        }
        if let Some(&e) = self.sample_epochs.iter().find(|&&e| e == 0 || e > self.t_max) {
            return Err(LeakError::InvalidParameter {
                name: "sample_epochs",
                value: e as f64,
                reason: "must lie in [1, t_max]",
            });
        }
        Ok(())
    }
}

/// Scores and stakes of every trial at each sampled epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkSamples {
    pub config: WalkConfig,
    pub epochs: Vec<u64>,
    /// `scores[k][trial]` at `epochs[k]`.
    pub scores: Vec<Vec<f64>>,
    pub stakes: Vec<Vec<f64>>,
}

impl WalkSamples {
    fn index_of(&self, epoch: u64) -> Option<usize> {
        self.epochs.iter().position(|&e| e == epoch)
    }

    pub fn scores_at(&self, epoch: u64) -> Option<&[f64]> {
        self.index_of(epoch).map(|k| self.scores[k].as_slice())
    }

    pub fn stakes_at(&self, epoch: u64) -> Option<&[f64]> {
        self.index_of(epoch).map(|k| self.stakes[k].as_slice())
    }

    pub fn stake_histogram_csv(&self, bins: usize) -> String {
        let hists: Vec<(u64, Histogram)> = self
            .epochs
            .iter()
            .zip(&self.stakes)
            .map(|(&e, s)| (e, Histogram::from_samples(s, bins)))
            .collect();
        histograms_to_csv(hists.iter().map(|(e, h)| (*e, h)), self.config.trials, self.config.seed)
    }

    pub fn score_histogram_csv(&self, bins: usize) -> String {
        let hists: Vec<(u64, Histogram)> = self
            .epochs
            .iter()
            .zip(&self.scores)
            .map(|(&e, s)| (e, Histogram::from_samples(s, bins)))
            .collect();
        histograms_to_csv(hists.iter().map(|(e, h)| (*e, h)), self.config.trials, self.config.seed)
    }
}

/// Seed of the stream used by one trial (or one run of a sweep).
pub fn stream_seed(root: u64, index: u64) -> u64 {
    // One SplitMix64 output step applied to the mixed pair.
    let mut z = root
        ^ index
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn run_trial(cfg: &WalkConfig, epochs: &[u64], trial: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = SplitMix64::seed_from_u64(stream_seed(cfg.seed, trial));
    let mut score: i64 = 0;
    let mut stake = INITIAL_STAKE;
    let mut scores = Vec::with_capacity(epochs.len());
    let mut stakes = Vec::with_capacity(epochs.len());
    let mut next = 0;
    for epoch in 1..=cfg.t_max {
        // Penalty from the score accumulated so far, then the score update.
        stake -= score as f64 * stake / PENALTY_SCALE;
        let on_favoured = rng.random_bool(cfg.p0);
        let favoured_is_observed = match cfg.schedule {
            BranchSchedule::Alternating => epoch % 2 == 1,
            BranchSchedule::Fixed => true,
        };
        let active = on_favoured == favoured_is_observed;
        score = if active {
            if cfg.bounded {
                (score - 1).max(0)
            } else {
                score - 1
            }
        } else {
            score + 4
        };
        while next < epochs.len() && epochs[next] == epoch {
            scores.push(score as f64);
            stakes.push(stake);
            next += 1;
        }
    }
    (scores, stakes)
}

/// Runs `trials` independent walks and records scores and stakes at the
/// sampled epochs. The stake follows `s <- s (1 - I / 2^26)` with the score
/// from the previous epoch.
pub fn monte_carlo_walk(cfg: &WalkConfig) -> Result<WalkSamples> {
    cfg.validate()?;
    let mut epochs = if cfg.sample_epochs.is_empty() {
        vec![cfg.t_max]
    } else {
        cfg.sample_epochs.clone()
    };
    epochs.sort_unstable();
    epochs.dedup();

    let per_trial: Vec<(Vec<f64>, Vec<f64>)> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| run_trial(cfg, &epochs, trial))
        .collect();

    let mut scores = vec![Vec::with_capacity(cfg.trials as usize); epochs.len()];
    let mut stakes = vec![Vec::with_capacity(cfg.trials as usize); epochs.len()];
    for (sc, st) in per_trial {
        for k in 0..epochs.len() {
            scores[k].push(sc[k]);
            stakes[k].push(st[k]);
        }
    }
    Ok(WalkSamples {
        config: cfg.clone(),
        epochs,
        scores,
        stakes,
    })
}

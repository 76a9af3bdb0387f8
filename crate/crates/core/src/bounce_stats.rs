//! Stake statistics for honest validators caught in a probabilistic bouncing attack.
//!
//! An honest validator lands on the Byzantine-favoured branch with probability
//! `p0` every epoch, so its inactivity score on one branch is a random walk.
//! Over `t` epochs the score is approximated by a Gaussian with mean `V t` and
//! density `exp(-(I - V t)^2 / (4 D t)) / sqrt(4 pi D t)`; integrating the
//! score gives a log-normal stake law, which is then truncated at the
//! ejection floor `a` and the cap `b`.
//!
//! `erf` comes from `libm` (the FreeBSD/musl rational approximations, below
//! one ulp on the real line), well inside the 1e-12 absolute error budget.

use serde::{Deserialize, Serialize};

use crate::error::{check_byzantine_share, check_positive_time, check_proportion, LeakError, Result};
use crate::leak_math::{BehaviorKind, EJECTION_THRESHOLD, INITIAL_STAKE, PENALTY_SCALE};
use crate::numeric::integrate_with_breaks;

/// Score drift per epoch: +3 every two epochs on average.
pub const SCORE_DRIFT: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BounceParams {
    pub p0: f64,
    pub beta0: f64,
    /// `D`, the diffusion coefficient of the score: `25 p0 (1 - p0)`.
    pub diffusion: f64,
    /// `V`, the score drift per epoch.
    pub drift: f64,
    /// `a`: stake at or below which a validator is ejected.
    pub floor: f64,
    /// `b`: the stake cap.
    pub cap: f64,
    pub penalty_scale: f64,
}

impl BounceParams {
    pub fn new(p0: f64, beta0: f64) -> Result<Self> {
        check_proportion("p0", p0)?;
        check_byzantine_share("beta0", beta0)?;
        Ok(Self {
            p0,
            beta0,
            diffusion: 25.0 * p0 * (1.0 - p0),
            drift: SCORE_DRIFT,
            floor: EJECTION_THRESHOLD,
            cap: INITIAL_STAKE,
            penalty_scale: PENALTY_SCALE,
        })
    }

    /// Same parameters with an explicit diffusion coefficient.
    pub fn with_diffusion(self, diffusion: f64) -> Self {
        Self { diffusion, ..self }
    }

    /// Mean of `penalty_scale * ln(s / cap)` after `t` epochs.
    fn log_stake_mean(&self, t: f64) -> f64 {
        -self.drift * t * t / 2.0
    }

    /// The `(4/3) D t^3` term of the log-normal exponent.
    fn log_stake_spread(&self, t: f64) -> f64 {
        4.0 / 3.0 * self.diffusion * t.powi(3)
    }
}

/// Distribution of the inactivity-score change over two epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDistribution {
    pub increments: Vec<(i64, f64)>,
}

impl StepDistribution {
    pub fn new(p0: f64) -> Self {
        let split = p0 * (1.0 - p0);
        Self {
            increments: vec![(8, split), (3, p0 * p0 + (1.0 - p0) * (1.0 - p0)), (-2, split)],
        }
    }

    pub fn total_probability(&self) -> f64 {
        self.increments.iter().map(|&(_, p)| p).sum()
    }

    pub fn mean(&self) -> f64 {
        self.increments.iter().map(|&(d, p)| d as f64 * p).sum()
    }
}

/// Window of honest splits `p0` for which the attack can keep bouncing:
/// honest validators alone stay below 2/3 while honest plus Byzantine exceed it.
pub fn p0_bounds(beta0: f64) -> Result<(f64, f64)> {
    check_byzantine_share("beta0", beta0)?;
    let lower = (2.0 - 3.0 * beta0) / (3.0 * (1.0 - beta0));
    let upper = 2.0 / (3.0 * (1.0 - beta0));
    Ok((lower, upper))
}

/// True when `p0` lies strictly inside [`p0_bounds`].
pub fn bouncing_feasible(p0: f64, beta0: f64) -> bool {
    match p0_bounds(beta0) {
        Ok((lo, hi)) => p0 > lo && p0 < hi,
        Err(_) => false,
    }
}

/// A probability stored as its base-10 logarithm, so that values far below
/// `f64::MIN_POSITIVE` survive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogProbability {
    pub log10: f64,
}

impl LogProbability {
    pub fn exponent(&self) -> i32 {
        self.log10.floor() as i32
    }

    pub fn mantissa(&self) -> f64 {
        10f64.powf(self.log10 - self.log10.floor())
    }

    /// Plain value; underflows to zero below about 1e-308.
    pub fn value(&self) -> f64 {
        10f64.powf(self.log10)
    }
}

impl std::fmt::Display for LogProbability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.4}e{}", self.mantissa(), self.exponent())
    }
}

/// Probability that at least one Byzantine proposer sits in the first `j`
/// slots for each of `k` consecutive epochs: `(1 - (1 - beta0)^j)^k`.
pub fn continuation_probability(beta0: f64, j: u32, k: u64) -> Result<LogProbability> {
    if !(beta0.is_finite() && (0.0..=1.0).contains(&beta0)) {
        return Err(LeakError::InvalidParameter {
            name: "beta0",
            value: beta0,
            reason: "must lie in [0, 1]",
        });
    }
    if j == 0 {
        return Err(LeakError::InvalidParameter {
            name: "j",
            value: 0.0,
            reason: "must be at least one slot",
        });
    }
    if k == 0 {
        return Ok(LogProbability { log10: 0.0 });
    }
    // ln(1 - (1 - beta0)^j), with the inner power kept in log space.
    let honest_run = j as f64 * (1.0 - beta0).ln();
    let per_epoch = (-honest_run.exp()).ln_1p();
    Ok(LogProbability {
        log10: k as f64 * per_epoch / std::f64::consts::LN_10,
    })
}

/// Gaussian density of the inactivity score `score` after `t` epochs.
pub fn score_gaussian_density(score: f64, t: f64, params: &BounceParams) -> Result<f64> {
    check_positive_time(t)?;
    let four_dt = 4.0 * params.diffusion * t;
    let dev = score - params.drift * t;
    Ok((-dev * dev / four_dt).exp() / (std::f64::consts::PI * four_dt).sqrt())
}

/// CDF of [`score_gaussian_density`].
pub fn score_gaussian_cdf(score: f64, t: f64, params: &BounceParams) -> Result<f64> {
    check_positive_time(t)?;
    let z = (score - params.drift * t) / (4.0 * params.diffusion * t).sqrt();
    Ok(0.5 * (1.0 + libm::erf(z)))
}

fn check_stake(s: f64) -> Result<()> {
    if s.is_finite() && s > 0.0 {
        Ok(())
    } else {
        Err(LeakError::NonPositiveStake(s))
    }
}

/// Log-normal density of an honest validator's stake after `t` epochs.
pub fn stake_density(s: f64, t: f64, params: &BounceParams) -> Result<f64> {
    check_stake(s)?;
    check_positive_time(t)?;
    Ok(stake_density_unchecked(s, t, params))
}

fn stake_density_unchecked(s: f64, t: f64, params: &BounceParams) -> f64 {
    let spread = params.log_stake_spread(t);
    let dev = params.penalty_scale * (s / params.cap).ln() - params.log_stake_mean(t);
    params.penalty_scale / (s * (std::f64::consts::PI * spread).sqrt()) * (-dev * dev / spread).exp()
}

/// CDF of [`stake_density`].
pub fn stake_cdf(s: f64, t: f64, params: &BounceParams) -> Result<f64> {
    if s.is_nan() || s < 0.0 {
        return Err(LeakError::NonPositiveStake(s));
    }
    check_positive_time(t)?;
    Ok(stake_cdf_unchecked(s, t, params))
}

fn stake_cdf_unchecked(s: f64, t: f64, params: &BounceParams) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    let z =
        (params.penalty_scale * (s / params.cap).ln() - params.log_stake_mean(t)) / params.log_stake_spread(t).sqrt();
    0.5 + 0.5 * libm::erf(z)
}

/// Median of the untruncated stake law.
pub fn stake_median(t: f64, params: &BounceParams) -> f64 {
    params.cap * (params.log_stake_mean(t) / params.penalty_scale).exp()
}

/// Stake law with ejection and the cap folded in: everything at or below the
/// floor collapses onto zero, everything above the cap onto the cap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StakeLaw {
    pub t: f64,
    pub params: BounceParams,
    pub mass_at_zero: f64,
    pub mass_at_cap: f64,
}

impl StakeLaw {
    /// Continuous part of the law; zero outside `(floor, cap)`.
    pub fn density(&self, x: f64) -> f64 {
        if x > self.params.floor && x < self.params.cap {
            stake_density_unchecked(x, self.t, &self.params)
        } else {
            0.0
        }
    }

    /// Mass of the continuous part, from the CDF.
    pub fn interior_mass(&self) -> f64 {
        stake_cdf_unchecked(self.params.cap, self.t, &self.params)
            - stake_cdf_unchecked(self.params.floor, self.t, &self.params)
    }

    /// Mass of the continuous part, by adaptive quadrature of [`Self::density`].
    pub fn integrated_density(&self, tol: f64) -> f64 {
        let p = &self.params;
        // The log-normal can be a sliver a few hundredths of an ETH wide, so
        // the peak is bracketed explicitly.
        let sigma_log = (p.log_stake_spread(self.t) / 2.0).sqrt() / p.penalty_scale;
        let median = stake_median(self.t, p);
        let breaks: Vec<f64> = (-12..=12).map(|k| median * (k as f64 * sigma_log).exp()).collect();
        integrate_with_breaks(|x| self.density(x), p.floor, p.cap, &breaks, tol)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        truncated_cdf_unchecked(x, self.t, &self.params)
    }

    /// Mean stake including the point masses.
    pub fn mean(&self, tol: f64) -> f64 {
        let p = &self.params;
        let sigma_log = (p.log_stake_spread(self.t) / 2.0).sqrt() / p.penalty_scale;
        let median = stake_median(self.t, p);
        let breaks: Vec<f64> = (-12..=12).map(|k| median * (k as f64 * sigma_log).exp()).collect();
        self.mass_at_cap * p.cap + integrate_with_breaks(|x| x * self.density(x), p.floor, p.cap, &breaks, tol)
    }
}

pub fn truncated_stake_law(t: f64, params: &BounceParams) -> Result<StakeLaw> {
    check_positive_time(t)?;
    Ok(StakeLaw {
        t,
        params: *params,
        mass_at_zero: stake_cdf_unchecked(params.floor, t, params),
        mass_at_cap: 1.0 - stake_cdf_unchecked(params.cap, t, params),
    })
}

/// CDF of the truncated law, with the unit step taken as `H(0) = 1`.
pub fn truncated_stake_cdf(x: f64, t: f64, params: &BounceParams) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(LeakError::NonPositiveStake(x));
    }
    check_positive_time(t)?;
    Ok(truncated_cdf_unchecked(x, t, params))
}

fn truncated_cdf_unchecked(x: f64, t: f64, params: &BounceParams) -> f64 {
    let step = |v: f64| if v >= 0.0 { 1.0 } else { 0.0 };
    let f_floor = stake_cdf_unchecked(params.floor, t, params);
    let f_x = stake_cdf_unchecked(x, t, params);
    f_floor + step(x - params.floor) * (f_x - f_floor) + step(x - params.cap) * (1.0 - f_x)
}

/// Stake of a semi-active (alternating) Byzantine validator.
pub fn semi_active_stake(t: f64, params: &BounceParams) -> f64 {
    let c = BehaviorKind::SemiActive.decay_coefficient(params.penalty_scale);
    params.cap * (-c * t * t).exp()
}

/// Probability that the Byzantine share exceeds 1/3 when weighed against a
/// single honest validator's stake, on one branch.
pub fn prob_byz_over_third(beta0: f64, t: f64, params: &BounceParams) -> Result<f64> {
    check_byzantine_share("beta0", beta0)?;
    check_positive_time(t)?;
    let x = 2.0 * beta0 / (1.0 - beta0) * semi_active_stake(t, params);
    Ok(truncated_cdf_unchecked(x, t, params))
}

/// Single-branch crossing probability next to the doubled figure obtained by
/// counting both branches of the attack as separate chances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossingProbability {
    pub single_branch: f64,
    /// `min(1, 2 * single_branch)`; treats the two branches' events as
    /// disjoint, which is a heuristic rather than a derived bound.
    pub doubled_heuristic: f64,
}

pub fn crossing_probability(beta0: f64, t: f64, params: &BounceParams) -> Result<CrossingProbability> {
    let single_branch = prob_byz_over_third(beta0, t, params)?;
    Ok(CrossingProbability {
        single_branch,
        doubled_heuristic: (2.0 * single_branch).min(1.0),
    })
}

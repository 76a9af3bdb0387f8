//! Monte Carlo walk against the Gaussian / log-normal approximations.

use std::sync::OnceLock;

use leaklab_core::bounce_stats::*;
use leaklab_core::numeric::integrate;
use leaklab_core::stats::*;
use leaklab_core::walk::*;
use proptest::prelude::*;

const TRIALS: u64 = 100_000;

fn unbounded() -> &'static WalkSamples {
    static S: OnceLock<WalkSamples> = OnceLock::new();
    S.get_or_init(|| {
        let cfg = WalkConfig::new(0.5, 4024, TRIALS, 0x5EED, false).with_samples(&[2, 1000, 2000, 4024]);
        monte_carlo_walk(&cfg).unwrap()
    })
}

fn params() -> BounceParams {
    BounceParams::new(0.5, 1.0 / 3.0).unwrap()
}

#[test]
fn mean_score_is_drift_times_time() {
    let m = mean(unbounded().scores_at(1000).unwrap());
    assert!((m - 1500.0).abs() / 1500.0 < 0.01, "{m}");
}

#[test]
fn two_epoch_steps_follow_step_distribution() {
    let d = StepDistribution::new(0.5);
    let scores = unbounded().scores_at(2).unwrap();
    for &(delta, p) in &d.increments {
        let freq = scores.iter().filter(|&&s| s == delta as f64).count() as f64 / TRIALS as f64;
        assert!((freq - p).abs() < 0.01, "{delta}: {freq} vs {p}");
    }
}

#[test]
fn score_variance_matches_gaussian() {
    // The Gaussian's variance is 2 D t.
    let v = variance(unbounded().scores_at(1000).unwrap());
    let want = 2.0 * params().diffusion * 1000.0;
    assert!((v - want).abs() / want <= 0.02, "empirical {v} vs 2Dt = {want}");
}

#[test]
fn score_distribution_matches_gaussian() {
    let mut s = unbounded().scores_at(1000).unwrap().to_vec();
    let p = params();
    let d = ks_distance_lattice(&mut s, 5.0, |x| score_gaussian_cdf(x, 1000.0, &p).unwrap());
    assert!(d <= 0.02, "KS {d}");
}

#[test]
fn stake_distribution_matches_log_normal() {
    let p = params();
    for t in [2000u64, 4024] {
        let mut s = unbounded().stakes_at(t).unwrap().to_vec();
        let d = ks_distance(&mut s, |x| stake_cdf(x, t as f64, &p).unwrap());
        assert!(d <= 0.02, "t={t}: KS {d}");
    }
}

#[test]
fn walk_matches_approximation_with_half_the_diffusion() {
    // The walk's per-epoch variance is D; the approximations use 2D.
    let p = params();
    let half = p.with_diffusion(p.diffusion / 2.0);
    let v = variance(unbounded().scores_at(1000).unwrap());
    assert!((v - p.diffusion * 1000.0).abs() / (p.diffusion * 1000.0) < 0.02, "{v}");
    let mut s = unbounded().scores_at(1000).unwrap().to_vec();
    assert!(ks_distance_lattice(&mut s, 5.0, |x| score_gaussian_cdf(x, 1000.0, &half).unwrap()) <= 0.02);
    for t in [2000u64, 4024] {
        let mut s = unbounded().stakes_at(t).unwrap().to_vec();
        assert!(ks_distance(&mut s, |x| stake_cdf(x, t as f64, &half).unwrap()) <= 0.02);
    }
}

#[test]
fn mean_log_stake_matches_drift() {
    let t = 2000.0;
    let logs: Vec<f64> = unbounded()
        .stakes_at(2000)
        .unwrap()
        .iter()
        .map(|s| (s / 32.0).ln())
        .collect();
    let want = -SCORE_DRIFT * t * t / 2f64.powi(27);
    let got = mean(&logs);
    assert!((got - want).abs() / want.abs() < 0.02, "{got} vs {want}");
}

#[test]
fn bounded_walk_gap_is_small() {
    let cfg = WalkConfig::new(0.5, 4000, 20_000, 11, true).with_samples(&[1000, 4000]);
    let bounded = monte_carlo_walk(&cfg).unwrap();
    let free = monte_carlo_walk(&WalkConfig { bounded: false, ..cfg }).unwrap();
    for t in [1000, 4000] {
        let mut a = bounded.stakes_at(t).unwrap().to_vec();
        let mut b = free.stakes_at(t).unwrap().to_vec();
        let d = ks_two_sample(&mut a, &mut b);
        println!("bounded vs unbounded stake KS at t={t}: {d:.4}");
        assert!(d < 0.05);
    }
}

#[test]
fn gaussian_density_integrates_to_one() {
    for p0 in [0.1, 0.5, 0.9] {
        let p = BounceParams::new(p0, 0.2).unwrap();
        let t = 1000.0;
        let sigma = (2.0 * p.diffusion * t).sqrt();
        let mu = p.drift * t;
        let total = integrate(
            |x| score_gaussian_density(x, t, &p).unwrap(),
            mu - 20.0 * sigma,
            mu + 20.0 * sigma,
            1e-12,
        );
        assert!((total - 1.0).abs() < 1e-8, "p0={p0}: {total}");
    }
}

#[test]
fn crossing_probability_near_half_at_one_third() {
    let p = params();
    for t in (200..=3000).step_by(100) {
        let q = prob_byz_over_third(1.0 / 3.0, t as f64, &p).unwrap();
        assert!((0.45..=0.55).contains(&q), "t={t}: {q}");
    }
}

proptest! {
    #[test]
    fn step_distribution_identities(k in 0u32..=1000) {
        let d = StepDistribution::new(k as f64 / 1000.0);
        prop_assert!((d.total_probability() - 1.0).abs() < 1e-15);
        prop_assert!((d.mean() - 3.0).abs() < 1e-13);
    }

    #[test]
    fn truncated_cdf_nondecreasing(x in 0.0f64..40.0, dx in 0.0f64..5.0, t in 1.0f64..6000.0, p0 in 0.05f64..0.95) {
        let p = BounceParams::new(p0, 0.25).unwrap();
        let a = truncated_stake_cdf(x, t, &p).unwrap();
        let b = truncated_stake_cdf(x + dx, t, &p).unwrap();
        prop_assert!(b >= a);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn truncated_cdf_endpoints(t in 1.0f64..6000.0, p0 in 0.05f64..0.95) {
        let p = BounceParams::new(p0, 0.25).unwrap();
        prop_assert_eq!(truncated_stake_cdf(0.0, t, &p).unwrap(), stake_cdf(16.75, t, &p).unwrap());
        prop_assert_eq!(truncated_stake_cdf(32.0, t, &p).unwrap(), 1.0);
        // Right-continuous at the floor.
        let at = truncated_stake_cdf(16.75, t, &p).unwrap();
        let above = truncated_stake_cdf(16.75 + 1e-12, t, &p).unwrap();
        prop_assert!((above - at).abs() < 1e-9);
    }

    #[test]
    fn crossing_probability_monotone_in_beta(b in 0.01f64..0.32, db in 0.0f64..0.01, t in 10.0f64..7000.0) {
        let p = BounceParams::new(0.55, 0.2).unwrap();
        let lo = prob_byz_over_third(b, t, &p).unwrap();
        let hi = prob_byz_over_third((b + db).min(1.0 / 3.0), t, &p).unwrap();
        prop_assert!(hi >= lo);
    }

    #[test]
    fn stake_density_nonnegative(s in 0.01f64..40.0, t in 1.0f64..7000.0, p0 in 0.01f64..0.99) {
        let p = BounceParams::new(p0, 0.1).unwrap();
        prop_assert!(stake_density(s, t, &p).unwrap() >= 0.0);
    }
}

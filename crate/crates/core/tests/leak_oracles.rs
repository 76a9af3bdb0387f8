use leaklab_core::leak_math::*;
use proptest::prelude::*;

fn params() -> LeakParams {
    LeakParams::default()
}

/// Classical RK4 on `s' = -r t s / 2^26`.
fn rk4_stake(rate: f64, t_end: f64, steps: usize) -> f64 {
    let f = |t: f64, s: f64| -rate * t * s / PENALTY_SCALE;
    let h = t_end / steps as f64;
    let (mut t, mut s) = (0.0, INITIAL_STAKE);
    for _ in 0..steps {
        let k1 = f(t, s);
        let k2 = f(t + h / 2.0, s + h / 2.0 * k1);
        let k3 = f(t + h / 2.0, s + h / 2.0 * k2);
        let k4 = f(t + h, s + h * k3);
        s += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += h;
    }
    s
}

#[test]
fn closed_form_solves_the_leak_ode() {
    for behavior in BehaviorKind::ALL {
        for t in [10.0, 500.0, 2500.0, 4685.0, 8000.0] {
            let ode = rk4_stake(behavior.score_rate(), t, 2_000);
            let closed = stake_at(behavior, t, &params()).unwrap();
            assert!(
                (ode - closed).abs() / closed < 1e-10,
                "{behavior:?} t={t}: {ode} vs {closed}"
            );
        }
    }
}

#[test]
fn closed_form_and_bisection_agree_on_grid() {
    let p = params();
    for i in 0..20 {
        for k in 0..20 {
            let p0 = 0.02 + 0.48 * i as f64 / 19.0;
            let beta0 = 0.33 * k as f64 / 19.0;
            let split = PartitionSplit::new(p0, beta0).unwrap();
            let closed = time_to_finalize_slashable(split, &p).unwrap();
            let bisect = time_to_finalize_slashable_bisection(split, &p).unwrap();
            assert_eq!(closed.capped, bisect.capped, "p0={p0} beta0={beta0}");
            assert!(
                (closed.epochs - bisect.epochs).abs() < 1e-4,
                "p0={p0} beta0={beta0}: {} vs {}",
                closed.epochs,
                bisect.epochs
            );
        }
    }
}

#[test]
fn finalization_rows() {
    let p = params();
    let slashable: Vec<u64> = [0.0, 0.1, 0.15, 0.2, 0.33]
        .iter()
        .map(|&b| {
            time_to_finalize_slashable(PartitionSplit::new(0.5, b).unwrap(), &p)
                .unwrap()
                .whole_epochs()
        })
        .collect();
    assert_eq!(slashable, vec![4685, 4066, 3622, 3107, 502]);

    // Bisection roots, frozen from a 50-digit evaluation of the same ratio.
    let expected = [4199.3067, 3800.8426, 3311.9295, 555.6535];
    for (b, want) in [0.1, 0.15, 0.2, 0.33].into_iter().zip(expected) {
        let t = time_to_finalize_semi_active(PartitionSplit::new(0.5, b).unwrap(), &p).unwrap();
        assert!((t.epochs - want).abs() < 1e-3, "beta0={b}: {}", t.epochs);
    }
}

#[test]
fn semi_active_is_never_faster_than_slashable() {
    let p = params();
    for b in [0.05, 0.1, 0.2, 0.3, 1.0 / 3.0] {
        let s = PartitionSplit::new(0.5, b).unwrap();
        let fast = time_to_finalize_slashable(s, &p).unwrap().epochs;
        let slow = time_to_finalize_semi_active(s, &p).unwrap().epochs;
        assert!(slow >= fast, "beta0={b}");
    }
}

proptest! {
    #[test]
    fn stake_decreases_in_time(t in 0.0f64..9000.0, dt in 1.0f64..500.0) {
        for b in [BehaviorKind::SemiActive, BehaviorKind::Inactive] {
            prop_assert!(stake_at(b, t + dt, &params()).unwrap() < stake_at(b, t, &params()).unwrap());
        }
    }

    #[test]
    fn inactive_decays_faster_than_semi_active(t in 1.0f64..9000.0) {
        let p = params();
        prop_assert!(stake_at(BehaviorKind::Inactive, t, &p).unwrap() < stake_at(BehaviorKind::SemiActive, t, &p).unwrap());
    }

    #[test]
    fn ratios_are_proportions_and_grow(p0 in 0.01f64..0.99, beta0 in 0.0f64..0.333, t in 0.0f64..4000.0) {
        let s = PartitionSplit::new(p0, beta0).unwrap();
        for r in [active_ratio_slashable, active_ratio_semi_active] {
            let now = r(s, t).unwrap();
            let later = r(s, t + 100.0).unwrap();
            prop_assert!((0.0..=1.0).contains(&now));
            prop_assert!(later >= now);
        }
        let h = active_ratio_honest(p0, t).unwrap();
        prop_assert!(h <= active_ratio_honest(p0, t + 100.0).unwrap());
    }

    #[test]
    fn slashable_ratio_dominates_semi_active(p0 in 0.01f64..0.99, beta0 in 0.0f64..0.333, t in 0.0f64..4000.0) {
        let s = PartitionSplit::new(p0, beta0).unwrap();
        prop_assert!(active_ratio_slashable(s, t).unwrap() >= active_ratio_semi_active(s, t).unwrap() - 1e-15);
    }

    #[test]
    fn more_byzantine_stake_finalizes_sooner(p0 in 0.05f64..0.6, b in 0.0f64..0.3, db in 0.001f64..0.03) {
        let p = params();
        let a = time_to_finalize_slashable(PartitionSplit::new(p0, b).unwrap(), &p).unwrap().epochs;
        let c = time_to_finalize_slashable(PartitionSplit::new(p0, b + db).unwrap(), &p).unwrap().epochs;
        prop_assert!(c <= a + 1e-9);
    }

    #[test]
    fn mirrored_branches_are_complementary(p0 in 0.01f64..0.99, t in 0.0f64..4000.0) {
        // With no Byzantine stake, the two branches see opposite honest splits.
        let s = PartitionSplit::new(p0, 0.0).unwrap();
        let a = active_ratio_slashable(s, t).unwrap();
        let b = active_ratio_slashable(s.mirrored(), t).unwrap();
        let e = (-(t * t) / 33_554_432.0f64).exp();
        prop_assert!((a - p0 / (p0 + (1.0 - p0) * e)).abs() < 1e-12);
        prop_assert!((b - (1.0 - p0) / ((1.0 - p0) + p0 * e)).abs() < 1e-12);
        let slow = time_to_finalize_slashable(s.slower_branch(), &params()).unwrap().epochs;
        let fast = time_to_finalize_slashable(s.slower_branch().mirrored(), &params()).unwrap().epochs;
        prop_assert!(slow >= fast);
    }

    #[test]
    fn byzantine_proportion_bounded(p0 in 0.01f64..0.99, beta0 in 0.0f64..0.333, t in 0.0f64..4685.0) {
        let s = PartitionSplit::new(p0, beta0).unwrap();
        let b = byz_proportion(s, t).unwrap();
        prop_assert!((0.0..=1.0).contains(&b));
        // Ejecting the inactive honest validators can only raise the share.
        let before = byz_proportion(s, 4685.0).unwrap();
        prop_assert!(before <= byz_max_proportion(s, &params()).unwrap() + 1e-12);
    }

    #[test]
    fn threshold_bound_is_the_crossing(p0 in 0.05f64..0.95) {
        let p = params();
        let b = min_beta_for_threshold(p0, &p).unwrap();
        if b <= 1.0 / 3.0 {
            let at = byz_max_proportion(PartitionSplit::new(p0, b).unwrap(), &p).unwrap();
            prop_assert!((at - 1.0 / 3.0).abs() < 1e-12);
        }
    }
}

use mnl_bandit::assortment::{optimize_brute_force, optimize_threshold, DEFAULT_TOLERANCE};
use mnl_bandit::policy::{gaussian_sample, sigma_hat, ucb_index};
use mnl_bandit::simulator::{run_simulation, FixedAssortment};
use mnl_bandit::{
    choice_probabilities, expected_revenue, run_policy, Assortment, MnlInstance, PolicyConfig,
    PolicyKind, PosteriorState,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn instance_params(max_n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, usize)> {
    (1..=max_n).prop_flat_map(|n| {
        (
            prop::collection::vec(0.0..=1.0f64, n),
            prop::collection::vec(0.0..=1.0f64, n),
            1..=n,
        )
    })
}

fn subset_of(n: usize) -> impl Strategy<Value = Assortment> {
    prop::collection::vec(any::<bool>(), n).prop_map(move |mask| {
        let items = mask
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect();
        Assortment::new(items, n).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn probabilities_are_a_distribution(
        (set, weights) in (1usize..15).prop_flat_map(|n| (subset_of(n), prop::collection::vec(0.0..5.0f64, n)))
    ) {
        let p = choice_probabilities(&set, &weights).unwrap();
        prop_assert!((p.total() - 1.0).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&p.outside));
        for x in &p.items {
            prop_assert!((0.0..=1.0).contains(x));
        }
    }

    #[test]
    fn revenue_is_probability_weighted_sum(
        (set, weights, revenues) in (1usize..15).prop_flat_map(|n| (
            subset_of(n),
            prop::collection::vec(0.0..5.0f64, n),
            prop::collection::vec(0.0..=1.0f64, n),
        ))
    ) {
        let p = choice_probabilities(&set, &weights).unwrap();
        let by_prob: f64 = set.items().iter().zip(&p.items).map(|(&i, pi)| revenues[i] * pi).sum();
        let r = expected_revenue(&set, &weights, &revenues).unwrap();
        prop_assert!((r - by_prob).abs() <= 1e-12);
        let max_r = set.items().iter().map(|&i| revenues[i]).fold(0.0, f64::max);
        prop_assert!(r >= 0.0 && r <= max_r + 1e-15);
    }

    #[test]
    fn restricted_monotonicity(
        ((revenues, weights, k), bumps) in instance_params(10)
            .prop_flat_map(|p| { let n = p.0.len(); (Just(p), prop::collection::vec(0.0..2.0f64, n)) })
    ) {
        let star = optimize_brute_force(&weights, &revenues, k).unwrap();
        let larger: Vec<f64> = weights.iter().zip(&bumps).map(|(v, b)| v + b).collect();
        let base = expected_revenue(&star.best_set, &weights, &revenues).unwrap();
        let up = expected_revenue(&star.best_set, &larger, &revenues).unwrap();
        prop_assert!(up >= base - 1e-12, "{up} < {base}");
    }

    #[test]
    fn lipschitz_in_weights(
        ((revenues, weights, k), other) in instance_params(10)
            .prop_flat_map(|p| { let n = p.0.len(); (Just(p), prop::collection::vec(0.0..3.0f64, n)) })
    ) {
        let star = optimize_brute_force(&weights, &revenues, k).unwrap();
        let s = &star.best_set;
        let lhs = (expected_revenue(s, &weights, &revenues).unwrap()
            - expected_revenue(s, &other, &revenues).unwrap()).abs();
        let diff: f64 = s.items().iter().map(|&i| (weights[i] - other[i]).abs()).sum();
        let denom = 1.0 + s.items().iter().map(|&i| weights[i]).sum::<f64>();
        prop_assert!(lhs <= diff / denom + 1e-12);
    }

    #[test]
    fn solvers_agree((revenues, weights, k) in instance_params(12)) {
        let brute = optimize_brute_force(&weights, &revenues, k).unwrap();
        let thr = optimize_threshold(&weights, &revenues, k, DEFAULT_TOLERANCE).unwrap();
        prop_assert!((brute.best_value - thr.best_value).abs() <= 1e-7);
        prop_assert_eq!(&brute.best_set, &thr.best_set);
        prop_assert!(thr.best_set.len() <= k);
        let reeval = expected_revenue(&thr.best_set, &weights, &revenues).unwrap();
        prop_assert!((reeval - thr.best_value).abs() <= 1e-9);
    }

    #[test]
    fn dropping_low_revenue_items_never_helps((revenues, weights, k) in instance_params(12)) {
        let best = optimize_threshold(&weights, &revenues, k, DEFAULT_TOLERANCE).unwrap();
        for &j in best.best_set.items() {
            if revenues[j] < best.best_value {
                let rest: Vec<usize> = best.best_set.items().iter().copied().filter(|&i| i != j).collect();
                let smaller = Assortment::new(rest, weights.len()).unwrap();
                let r = expected_revenue(&smaller, &weights, &revenues).unwrap();
                prop_assert!(r <= best.best_value + 1e-12);
            }
        }
    }

    #[test]
    fn revenue_scaling_preserves_argmax((revenues, weights, k) in instance_params(12)) {
        let doubled: Vec<f64> = revenues.iter().map(|r| 2.0 * r).collect();
        let base = optimize_threshold(&weights, &revenues, k, DEFAULT_TOLERANCE).unwrap();
        let scaled = optimize_threshold(&weights, &doubled, k, DEFAULT_TOLERANCE).unwrap();
        prop_assert!((scaled.best_value - 2.0 * base.best_value).abs() <= 1e-9);
        prop_assert_eq!(&scaled.best_set, &base.best_set);
        let brute = optimize_brute_force(&weights, &doubled, k).unwrap();
        prop_assert_eq!(&brute.best_set, &base.best_set);
    }

    #[test]
    fn gaussian_structure(
        (epochs, picks) in (2usize..12).prop_flat_map(|n| (
            prop::collection::vec(1u64..500, n),
            prop::collection::vec(0u64..600, n),
        )),
        seed in any::<u64>(),
    ) {
        let state = PosteriorState::from_counts(epochs, picks).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cor = gaussian_sample(&state, 10_000, 3, 1, true, &mut rng).unwrap();
        prop_assert_eq!(cor.theta.len(), 1);
        prop_assert!(cor.z.iter().all(|&z| z == cor.theta[0]));
        for i in 0..state.num_items() {
            let v_hat = state.mean_estimate(i).unwrap();
            let s = sigma_hat(v_hat, state.epochs()[i], 10_000, 3).unwrap();
            prop_assert!(s >= 0.0);
            prop_assert!((cor.mu[i] - (v_hat + cor.theta[0] * s)).abs() <= 1e-12 * (1.0 + cor.mu[i].abs()));
        }
        let clamped: Vec<f64> = cor.mu.iter().map(|m| m.max(0.0)).collect();
        prop_assert!(clamped.iter().all(|&m| m >= 0.0));

        let ind = gaussian_sample(&state, 10_000, 3, 1, false, &mut rng).unwrap();
        prop_assert_eq!(ind.theta.len(), state.num_items());
        prop_assert_eq!(&ind.z, &ind.theta);
    }

    #[test]
    fn ucb_index_dominates_estimate(
        (epochs, picks) in (1usize..12).prop_flat_map(|n| (
            prop::collection::vec(1u64..500, n),
            prop::collection::vec(0u64..600, n),
        )),
        ell in 0u64..100_000,
    ) {
        let state = PosteriorState::from_counts(epochs, picks).unwrap();
        let idx = ucb_index(&state, ell as f64).unwrap();
        for (i, x) in idx.iter().enumerate() {
            prop_assert!(*x >= state.mean_estimate(i).unwrap());
        }
    }
}

#[test]
fn beta_samples_are_nonnegative() {
    let state = PosteriorState::from_counts(vec![1, 2, 50, 3], vec![1, 40, 1, 3]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..10_000 {
        let s = mnl_bandit::policy::beta_sample(&state, &mut rng).unwrap();
        assert!(s.mu.iter().all(|&m| m >= 0.0 && m.is_finite()));
    }
}

fn small_instance(horizon: u64) -> MnlInstance {
    MnlInstance::new(
        vec![0.95, 0.35, 0.6, 0.8, 0.15, 0.5],
        vec![0.25, 0.9, 0.55, 0.45, 0.95, 0.7],
        3,
        horizon,
    )
    .unwrap()
}

#[test]
fn simulation_is_bit_identical_under_seed() {
    let inst = small_instance(3_000);
    for kind in PolicyKind::ALL {
        let cfg = PolicyConfig::new(kind, 3);
        let a = run_simulation(&inst, &cfg, 77).unwrap();
        let b = run_simulation(&inst, &cfg, 77).unwrap();
        assert_eq!(a, b, "{kind}");
        let bits = |t: &mnl_bandit::RegretTrajectory| {
            t.cumulative_regret.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        };
        assert_eq!(bits(&a), bits(&b));
    }
}

#[test]
fn trajectories_satisfy_accounting_invariants() {
    let inst = small_instance(4_000);
    for kind in PolicyKind::ALL {
        let traj = run_simulation(&inst, &PolicyConfig::new(kind, 3), 5).unwrap();
        assert_eq!(traj.cumulative_regret.len(), 4_000);
        assert_eq!(traj.per_epoch.iter().map(|r| r.length).sum::<u64>(), 4_000);
        let mut prev = 0.0;
        for &r in &traj.cumulative_regret {
            let inc = r - prev;
            assert!(inc >= -1e-12 && inc <= traj.optimal_value + 1e-12);
            prev = r;
        }
        for rec in &traj.per_epoch {
            assert!(rec.offered_set.len() <= 3);
            if !rec.truncated {
                assert_eq!(rec.length, rec.total_picks() + 1);
            }
        }
        assert!(traj.per_epoch[..traj.per_epoch.len() - 1].iter().all(|r| !r.truncated));
    }
}

#[test]
fn injected_fixed_policies() {
    let inst = small_instance(5_000);
    let star = mnl_bandit::simulator::optimal_assortment(&inst).unwrap();
    let zero = run_policy(&inst, &mut FixedAssortment(star.best_set.clone()), 1, |_| {}).unwrap();
    assert!(zero.cumulative_regret.iter().all(|&r| r == 0.0));
    let empty = run_policy(&inst, &mut FixedAssortment(Assortment::empty()), 1, |_| {}).unwrap();
    assert_eq!(empty.final_regret(), 5_000.0 * star.best_value);
    assert!(empty.per_epoch.iter().all(|r| r.length == 1));
}

#[test]
fn correlated_boost_is_optimistic_more_often_than_independent() {
    let inst = small_instance(5_000);
    let mean_fraction = |kind| {
        (0..5)
            .map(|seed| {
                run_simulation(&inst, &PolicyConfig::new(kind, 3), seed)
                    .unwrap()
                    .optimistic_fraction()
            })
            .sum::<f64>()
            / 5.0
    };
    let boost = mean_fraction(PolicyKind::TsGaussCorrelatedBoost);
    let indep = mean_fraction(PolicyKind::TsGaussIndependent);
    assert!(boost > indep, "boost {boost} vs independent {indep}");
}

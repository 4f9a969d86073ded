//! Sampling checks against closed forms. The oracles here draw from
//! `rand_distr` directly and never go through the simulator.

use mnl_bandit::policy::{beta_sample, posterior_mean, posterior_moments};
use mnl_bandit::simulator::{initial_exploration, run_epoch};
use mnl_bandit::{Assortment, MnlInstance, PosteriorState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Geometric};
use statrs::distribution::{Beta as BetaDist, ContinuousCDF};

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}

/// Draws `v ~ 1/Beta(α, β) − 1`, then `m ~ Geometric(1/(1+v))`, and keeps
/// the `v` whose `m` equals `observed`.
fn conditional_draws(alpha: f64, beta: f64, observed: u64, draws: usize, seed: u64) -> Vec<f64> {
    let prior = Beta::new(alpha, beta).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kept = Vec::new();
    for _ in 0..draws {
        let v = 1.0 / prior.sample(&mut rng) - 1.0;
        let m = Geometric::new(1.0 / (1.0 + v)).unwrap().sample(&mut rng);
        if m == observed {
            kept.push(v);
        }
    }
    kept
}

#[test]
fn conjugate_update_from_flat_prior() {
    // Beta(2, 1 + m) has a mean but no variance, so compare mean and median.
    for (observed, seed) in [(0u64, 1u64), (1, 2)] {
        let kept = conditional_draws(1.0, 1.0, observed, 1_000_000, seed);
        let (mean, _) = mean_var(&kept);
        let expected_mean = posterior_mean(2, 1 + observed).unwrap();
        assert!(
            (mean / expected_mean - 1.0).abs() < 0.02,
            "m = {observed}: mean {mean} vs {expected_mean}"
        );
        let theta_median = BetaDist::new(2.0, 1.0 + observed as f64).unwrap().inverse_cdf(0.5);
        let expected_median = 1.0 / theta_median - 1.0;
        let got = median(kept);
        assert!(
            (got / expected_median - 1.0).abs() < 0.02,
            "m = {observed}: median {got} vs {expected_median}"
        );
    }
}

#[test]
fn conjugate_update_moments_with_proper_prior() {
    let (alpha, beta, observed) = (6u64, 3u64, 2u64);
    let kept = conditional_draws(alpha as f64, beta as f64, observed, 5_000_000, 9);
    let (mean, var) = mean_var(&kept);
    let (m, v) = posterior_moments(alpha + 1, beta + observed).unwrap();
    assert!((mean / m - 1.0).abs() < 0.02, "mean {mean} vs {m}");
    assert!((var / v - 1.0).abs() < 0.02, "variance {var} vs {v}");
}

#[test]
fn beta_transform_moments_match_closed_form() {
    let state = PosteriorState::from_counts(vec![10], vec![7]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let xs: Vec<f64> = (0..1_000_000)
        .map(|_| beta_sample(&state, &mut rng).unwrap().mu[0])
        .collect();
    let (mean, var) = mean_var(&xs);
    let (m, v) = posterior_moments(10, 7).unwrap();
    assert!((mean / m - 1.0).abs() < 0.02);
    assert!((var / v - 1.0).abs() < 0.02);
}

#[test]
fn epoch_picks_are_unbiased_regardless_of_companions() {
    let inst = MnlInstance::new(vec![0.5; 3], vec![0.3, 0.7, 0.5], 3, 10).unwrap();
    let epochs = 100_000;
    for (items, seed) in [(vec![0], 3u64), (vec![0, 1, 2], 4)] {
        let set = Assortment::new(items, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let picks: Vec<f64> = (0..epochs)
            .map(|_| {
                run_epoch(&inst, &set, u64::MAX, &mut rng)
                    .unwrap()
                    .picks_of(0)
                    .unwrap() as f64
            })
            .collect();
        let (mean, var) = mean_var(&picks);
        let se = (var / epochs as f64).sqrt();
        assert!((mean - 0.3).abs() <= 3.0 * se, "{set}: mean {mean}, se {se}");
    }
}

#[test]
fn exploration_consumes_geometric_steps() {
    // One item with v = 0.6: consumed steps ~ Geometric(1/1.6) on {1, 2, ...}.
    let v = 0.6;
    let inst = MnlInstance::new(vec![0.5], vec![v], 1, 1_000_000).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let runs = 50_000;
    let mut counts = [0usize; 4];
    let mut picks = Vec::with_capacity(runs);
    for _ in 0..runs {
        let mut state = PosteriorState::fresh(1);
        let out = initial_exploration(&inst, &mut state, &mut rng).unwrap();
        assert_eq!(state.epochs(), &[1]);
        let steps = out.consumed_steps as usize;
        assert!(steps >= 1);
        if steps <= 3 {
            counts[steps] += 1;
        }
        picks.push(state.picks()[0] as f64);
    }
    let p = 1.0 / (1.0 + v);
    for (steps, &c) in counts.iter().enumerate().skip(1) {
        let expected = p * (1.0 - p).powi(steps as i32 - 1);
        let freq = c as f64 / runs as f64;
        let se = (expected * (1.0 - expected) / runs as f64).sqrt();
        assert!((freq - expected).abs() <= 4.0 * se, "P(steps = {steps}) {freq} vs {expected}");
    }
    let (mean, var) = mean_var(&picks);
    assert!((mean - v).abs() <= 3.0 * (var / runs as f64).sqrt());
}

#[test]
fn choice_frequencies_follow_mnl() {
    let weights = [0.4, 1.2, 0.1];
    let set = Assortment::new(vec![0, 1, 2], 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let draws = 400_000;
    let mut hits = [0usize; 4];
    for _ in 0..draws {
        match mnl_bandit::sample_choice(&set, &weights, &mut rng).unwrap() {
            mnl_bandit::ChoiceOutcome::Outside => hits[3] += 1,
            mnl_bandit::ChoiceOutcome::Item(i) => hits[i] += 1,
        }
    }
    let p = mnl_bandit::choice_probabilities(&set, &weights).unwrap();
    let expected = [p.items[0], p.items[1], p.items[2], p.outside];
    for (h, e) in hits.iter().zip(expected) {
        let freq = *h as f64 / draws as f64;
        assert!((freq - e).abs() <= 4.0 * (e * (1.0 - e) / draws as f64).sqrt());
    }
}

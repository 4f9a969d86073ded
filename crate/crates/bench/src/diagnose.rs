//! Statistical self-checks: geometric epoch feedback, posterior moments and
//! concentration coverage of the running estimates.

use mnl_bandit::policy::{beta_sample, posterior_moments};
use mnl_bandit::simulator::{run_epoch, run_policy};
use mnl_bandit::{Assortment, MnlInstance, PolicyConfig, PolicyKind, PosteriorState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::config::substream_seed;
use crate::error::{BenchError, Result};
use crate::generate::generate_instance;
use crate::stats::{geometric_chi_square, mean_and_std_err, mean_and_variance};

pub const P_VALUE_THRESHOLD: f64 = 0.01;
pub const MOMENT_TOLERANCE: f64 = 0.02;
pub const COVERAGE_LIMIT: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct DiagnoseConfig {
    pub seed: u64,
    pub geometric_weights: Vec<f64>,
    pub geometric_epochs: usize,
    pub moment_params: Vec<(u64, u64)>,
    pub moment_draws: usize,
    pub coverage_n: usize,
    pub coverage_k: usize,
    pub coverage_horizon: u64,
    pub coverage_gen_seed: u64,
    pub coverage_policy: PolicyKind,
}

impl Default for DiagnoseConfig {
    fn default() -> Self {
        DiagnoseConfig {
            seed: 0,
            geometric_weights: vec![0.3, 0.7],
            geometric_epochs: 100_000,
            moment_params: vec![(4, 2), (5, 1), (10, 7)],
            moment_draws: 1_000_000,
            coverage_n: 10,
            coverage_k: 3,
            coverage_horizon: 20_000,
            coverage_gen_seed: 0,
            coverage_policy: PolicyKind::TsGaussCorrelatedBoost,
        }
    }
}

impl DiagnoseConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(BenchError::Config(msg.into()));
        if self.geometric_weights.is_empty() || self.geometric_epochs < 2 {
            return bad("geometric check needs at least one weight and two epochs");
        }
        if self.geometric_weights.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return bad("geometric weights must be positive and finite");
        }
        if self.moment_params.iter().any(|&(a, _)| a <= 2) || self.moment_draws < 2 {
            return bad("moment check needs alpha > 2 and at least two draws");
        }
        if self.coverage_k == 0 || self.coverage_k > self.coverage_n {
            return bad("coverage check needs 1 <= k <= n");
        }
        if (self.coverage_horizon as f64) * (self.coverage_k as f64) < 3.0 {
            return bad("coverage check needs T·K >= 3");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    pub details: serde_json::Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticReport {
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl DiagnosticReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Offers all items of `weights` together for `epochs` epochs. For each item,
/// checks the mean of the per-epoch pick counts against `v_i` (3 standard
/// errors) and their law against Geometric(1/(1+v_i)) by chi-square.
pub fn geometric_fit(weights: &[f64], epochs: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let n = weights.len();
    let inst = MnlInstance::new(vec![0.5; n], weights.to_vec(), n, 1)?;
    let set = Assortment::new((0..n).collect(), n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![Vec::with_capacity(epochs); n];
    for _ in 0..epochs {
        let rec = run_epoch(&inst, &set, u64::MAX, &mut rng)?;
        for (i, c) in counts.iter_mut().enumerate() {
            c.push(rec.picks_of(i).unwrap_or(0));
        }
    }
    let mut checks = Vec::new();
    for (i, c) in counts.iter().enumerate() {
        let v = weights[i];
        let as_f64: Vec<f64> = c.iter().map(|&m| m as f64).collect();
        let (mean, se) = mean_and_std_err(&as_f64);
        let fit = geometric_chi_square(c, 1.0 / (1.0 + v));
        checks.push(CheckResult {
            name: format!("geometric_mean_item_{i}"),
            passed: (mean - v).abs() <= 3.0 * se,
            p_value: None,
            details: json!({ "weight": v, "mean": mean, "std_err": se, "epochs": epochs }),
        });
        checks.push(CheckResult {
            name: format!("geometric_fit_item_{i}"),
            passed: fit.p_value > P_VALUE_THRESHOLD,
            p_value: Some(fit.p_value),
            details: json!({
                "weight": v,
                "statistic": fit.statistic,
                "degrees_of_freedom": fit.degrees_of_freedom,
                "bins": fit.bins,
            }),
        });
    }
    Ok(checks)
}

/// Monte-Carlo mean and variance of the sampler's `1/Beta(α, β) − 1` draws
/// against the closed forms.
pub fn posterior_moment_check(alpha: u64, beta: u64, draws: usize, seed: u64) -> Result<CheckResult> {
    let state = PosteriorState::from_counts(vec![alpha], vec![beta])?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Vec::with_capacity(draws);
    for _ in 0..draws {
        xs.push(beta_sample(&state, &mut rng)?.mu[0]);
    }
    let (mean, var) = mean_and_variance(&xs);
    let (m, v) = posterior_moments(alpha, beta)?;
    let mean_err = (mean / m - 1.0).abs();
    let var_err = (var / v - 1.0).abs();
    Ok(CheckResult {
        name: format!("posterior_moments_{alpha}_{beta}"),
        passed: mean_err <= MOMENT_TOLERANCE && var_err <= MOMENT_TOLERANCE,
        p_value: None,
        details: json!({
            "alpha": alpha,
            "beta": beta,
            "draws": draws,
            "mean": mean,
            "expected_mean": m,
            "variance": var,
            "expected_variance": v,
            "mean_rel_err": mean_err,
            "variance_rel_err": var_err,
        }),
    })
}

/// `4 √(2 v̂ (v̂+1) ln(ℓ+1) / n) + 48 ln(ℓ+1) / n`
pub fn coverage_radius(v_hat: f64, n: u64, epoch: u64) -> f64 {
    let log = ((epoch + 1) as f64).ln();
    let n = n as f64;
    4.0 * (2.0 * v_hat * (v_hat + 1.0) * log / n).sqrt() + 48.0 * log / n
}

/// Fraction of (item, epoch) pairs, over items with at least one observed
/// epoch, whose running estimate misses the true weight by more than the
/// coverage radius.
pub fn coverage_check(
    instance: &MnlInstance,
    policy: PolicyKind,
    seed: u64,
) -> Result<CheckResult> {
    let weights = instance.weights().to_vec();
    let mut pairs = 0u64;
    let mut violations = 0u64;
    let mut config = PolicyConfig::new(policy, instance.cardinality_cap());
    config.validate()?;
    run_policy(instance, &mut config, seed, |view| {
        let state = view.state;
        for (i, &v) in weights.iter().enumerate() {
            let n = state.epochs()[i];
            if n == 0 {
                continue;
            }
            let v_hat = state.picks()[i] as f64 / n as f64;
            pairs += 1;
            if (v_hat - v).abs() > coverage_radius(v_hat, n, view.epoch) {
                violations += 1;
            }
        }
    })?;
    let fraction = if pairs == 0 {
        0.0
    } else {
        violations as f64 / pairs as f64
    };
    Ok(CheckResult {
        name: "concentration_coverage".into(),
        passed: fraction <= COVERAGE_LIMIT,
        p_value: None,
        details: json!({
            "policy": policy.as_str(),
            "num_items": instance.num_items(),
            "horizon": instance.horizon(),
            "pairs": pairs,
            "violations": violations,
            "violation_fraction": fraction,
        }),
    })
}

pub fn diagnose(config: &DiagnoseConfig) -> Result<DiagnosticReport> {
    config.validate()?;
    let mut checks = geometric_fit(
        &config.geometric_weights,
        config.geometric_epochs,
        substream_seed(config.seed, "diagnose/geometric", 0),
    )?;
    for (j, &(a, b)) in config.moment_params.iter().enumerate() {
        checks.push(posterior_moment_check(
            a,
            b,
            config.moment_draws,
            substream_seed(config.seed, "diagnose/moments", j as u64),
        )?);
    }
    let inst = generate_instance(
        config.coverage_n,
        config.coverage_k,
        config.coverage_horizon,
        config.coverage_gen_seed,
    )?;
    checks.push(coverage_check(
        &inst,
        config.coverage_policy,
        substream_seed(config.seed, "diagnose/coverage", 0),
    )?);
    Ok(DiagnosticReport {
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

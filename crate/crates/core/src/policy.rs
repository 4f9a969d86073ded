//! Learning policies for the MNL-Bandit.
//!
//! All policies share the per-item statistics in [`PosteriorState`]: the
//! number of epochs an item was offered (`n_i`) and its cumulative picks
//! (`V_i`). They differ only in how a parameter vector is drawn from those
//! statistics before the static optimizer picks the next assortment:
//!
//! * `ts-beta`: `μ_i = 1/θ_i − 1`, `θ_i ~ Beta(n_i, V_i)` independently.
//! * `ts-gauss-*`: `μ_i^{(j)} = v̂_i + θ^{(j)} σ̂_i` with `v̂_i = V_i / n_i`
//!   and `σ̂_i` from [`sigma_hat`]; `θ` is shared across items in the
//!   correlated modes and drawn per item in the independent mode. The
//!   boosted mode takes the item-wise maximum over `J` draws.
//! * `ucb`: deterministic optimistic index [`ucb_index`].

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::assortment::{optimize, OptimizationResult};
use crate::error::{Error, Result};
use crate::mnl::{Assortment, MnlInstance};

/// Per-item epoch counts `n_i` and cumulative picks `V_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosteriorState {
    epochs: Vec<u64>,
    picks: Vec<u64>,
}

impl PosteriorState {
    /// All counts zero; used before forced exploration.
    pub fn fresh(num_items: usize) -> Self {
        Self {
            epochs: vec![0; num_items],
            picks: vec![0; num_items],
        }
    }

    /// `n_i = V_i = 1`, the `Beta(1, 1)` starting prior.
    pub fn beta_prior(num_items: usize) -> Self {
        Self {
            epochs: vec![1; num_items],
            picks: vec![1; num_items],
        }
    }

    pub fn from_counts(epochs: Vec<u64>, picks: Vec<u64>) -> Result<Self> {
        if epochs.len() != picks.len() {
            return Err(Error::InvalidInput(format!(
                "{} epoch counts but {} pick counts",
                epochs.len(),
                picks.len()
            )));
        }
        Ok(Self { epochs, picks })
    }

    pub fn num_items(&self) -> usize {
        self.epochs.len()
    }

    pub fn epochs(&self) -> &[u64] {
        &self.epochs
    }

    pub fn picks(&self) -> &[u64] {
        &self.picks
    }

    /// `v̂_i = V_i / n_i`; requires `n_i ≥ 1`.
    pub fn mean_estimate(&self, item: usize) -> Result<f64> {
        let n = self.epochs[item];
        if n == 0 {
            return Err(self.uninitialized(item));
        }
        Ok(self.picks[item] as f64 / n as f64)
    }

    fn uninitialized(&self, item: usize) -> Error {
        Error::UninitializedPosterior {
            item,
            epochs: self.epochs[item],
            picks: self.picks[item],
        }
    }

    fn require_offered(&self) -> Result<()> {
        match self.epochs.iter().position(|&n| n == 0) {
            Some(i) => Err(self.uninitialized(i)),
            None => Ok(()),
        }
    }

    /// Records one completed epoch: for every `i ∈ set`, `V_i += picks_i`
    /// and `n_i += 1`. `picks` lists `(item, count)` pairs; an item missing
    /// from the list counts as zero picks.
    pub fn update(&mut self, set: &Assortment, picks: &[(usize, u64)]) -> Result<()> {
        set.check_range(self.num_items())?;
        if let Some(&(item, _)) = picks.iter().find(|(i, c)| *c > 0 && !set.contains(*i)) {
            return Err(Error::InconsistentFeedback(item));
        }
        for &i in set.items() {
            self.epochs[i] += 1;
        }
        for &(i, c) in picks {
            if set.contains(i) {
                self.picks[i] += c;
            }
        }
        Ok(())
    }

    /// Overwrites one item's counts; used by forced exploration.
    pub(crate) fn set_counts(&mut self, item: usize, epochs: u64, picks: u64) {
        self.epochs[item] = epochs;
        self.picks[item] = picks;
    }
}

/// Parameters drawn for one epoch.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleSet {
    /// Sampled (or index) parameter per item, before any clamping.
    pub mu: Vec<f64>,
    /// Standard-normal draws consumed. Correlated modes hold `J` values;
    /// the independent mode holds `N · J` values, item-major. Empty for
    /// the Beta sampler and UCB.
    pub theta: Vec<f64>,
    /// Standardized deviation actually applied to each item, so that
    /// `mu[i] = v̂_i + z[i] · σ̂_i`. Empty outside the Gaussian samplers.
    pub z: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PolicyKind {
    #[serde(rename = "ts-beta")]
    TsBeta,
    #[serde(rename = "ts-gauss-independent")]
    TsGaussIndependent,
    #[serde(rename = "ts-gauss-correlated")]
    TsGaussCorrelated,
    #[serde(rename = "ts-gauss-correlated-boost")]
    TsGaussCorrelatedBoost,
    #[serde(rename = "ucb")]
    Ucb,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::TsBeta,
        PolicyKind::TsGaussIndependent,
        PolicyKind::TsGaussCorrelated,
        PolicyKind::TsGaussCorrelatedBoost,
        PolicyKind::Ucb,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::TsBeta => "ts-beta",
            PolicyKind::TsGaussIndependent => "ts-gauss-independent",
            PolicyKind::TsGaussCorrelated => "ts-gauss-correlated",
            PolicyKind::TsGaussCorrelatedBoost => "ts-gauss-correlated-boost",
            PolicyKind::Ucb => "ucb",
        }
    }

    pub fn is_gaussian(self) -> bool {
        matches!(
            self,
            PolicyKind::TsGaussIndependent
                | PolicyKind::TsGaussCorrelated
                | PolicyKind::TsGaussCorrelatedBoost
        )
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown policy '{s}' (expected one of: {})",
                    PolicyKind::ALL.map(PolicyKind::as_str).join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    /// Number of correlated draws `J` whose item-wise maximum is used.
    pub boost_samples: usize,
    pub clamp_negative: bool,
}

impl PolicyConfig {
    /// Standard configuration for a cardinality cap `k`: `J = k` for the
    /// boosted variant, `J = 1` otherwise.
    pub fn new(kind: PolicyKind, k: usize) -> Self {
        let boost_samples = if kind == PolicyKind::TsGaussCorrelatedBoost {
            k.max(1)
        } else {
            1
        };
        Self {
            kind,
            boost_samples,
            clamp_negative: true,
        }
    }

    pub fn with_boost_samples(mut self, j: usize) -> Self {
        self.boost_samples = j;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.boost_samples < 1 {
            return Err(Error::InvalidConfig("boost_samples must be at least 1".into()));
        }
        if self.kind != PolicyKind::TsGaussCorrelatedBoost && self.boost_samples != 1 {
            return Err(Error::InvalidConfig(format!(
                "boost_samples = {} is only allowed for {}",
                self.boost_samples,
                PolicyKind::TsGaussCorrelatedBoost
            )));
        }
        Ok(())
    }

    /// Whether the policy starts with one single-item epoch per item.
    pub fn needs_exploration(&self) -> bool {
        self.kind != PolicyKind::TsBeta
    }

    pub fn initial_state(&self, num_items: usize) -> PosteriorState {
        if self.needs_exploration() {
            PosteriorState::fresh(num_items)
        } else {
            PosteriorState::beta_prior(num_items)
        }
    }
}

/// The part of an instance a policy is allowed to see.
#[derive(Debug, Clone, Copy)]
pub struct Geometry<'a> {
    pub revenues: &'a [f64],
    pub cardinality_cap: usize,
    pub horizon: u64,
}

impl<'a> From<&'a MnlInstance> for Geometry<'a> {
    fn from(inst: &'a MnlInstance) -> Self {
        Self {
            revenues: inst.revenues(),
            cardinality_cap: inst.cardinality_cap(),
            horizon: inst.horizon(),
        }
    }
}

/// Independent `μ_i = 1/θ_i − 1` with `θ_i ~ Beta(n_i, V_i)`.
pub fn beta_sample<R: Rng + ?Sized>(state: &PosteriorState, rng: &mut R) -> Result<SampleSet> {
    let mut mu = Vec::with_capacity(state.num_items());
    for i in 0..state.num_items() {
        let (n, v) = (state.epochs[i], state.picks[i]);
        if n == 0 || v == 0 {
            return Err(state.uninitialized(i));
        }
        let dist = Beta::new(n as f64, v as f64)
            .map_err(|e| Error::InvalidInput(format!("Beta({n}, {v}): {e}")))?;
        let theta: f64 = dist.sample(rng);
        mu.push((1.0 / theta.max(f64::MIN_POSITIVE) - 1.0).max(0.0));
    }
    Ok(SampleSet {
        mu,
        ..SampleSet::default()
    })
}

/// Mean `β/(α−1)` of `1/Beta(α, β) − 1`.
pub fn posterior_mean(alpha: u64, beta: u64) -> Result<f64> {
    if alpha <= 1 {
        return Err(Error::UndefinedMoment(format!(
            "mean needs alpha > 1, got {alpha}"
        )));
    }
    Ok(beta as f64 / (alpha - 1) as f64)
}

/// Variance `m(m+1)/(α−2)` of `1/Beta(α, β) − 1`, where `m` is the mean.
pub fn posterior_variance(alpha: u64, beta: u64) -> Result<f64> {
    if alpha <= 2 {
        return Err(Error::UndefinedMoment(format!(
            "variance needs alpha > 2, got {alpha}"
        )));
    }
    let mean = posterior_mean(alpha, beta)?;
    Ok(mean * (mean + 1.0) / (alpha - 2) as f64)
}

pub fn posterior_moments(alpha: u64, beta: u64) -> Result<(f64, f64)> {
    Ok((posterior_mean(alpha, beta)?, posterior_variance(alpha, beta)?))
}

/// Gaussian posterior width with `ln(TK)` supplied directly.
pub fn sigma_hat_from_log(v_hat: f64, n: u64, log_tk: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::UninitializedPosterior {
            item: 0,
            epochs: 0,
            picks: 0,
        });
    }
    if v_hat.is_nan() || v_hat < 0.0 || log_tk.is_nan() || log_tk < 0.0 {
        return Err(Error::InvalidInput(format!(
            "sigma_hat needs v_hat >= 0 and ln(TK) >= 0, got {v_hat} and {log_tk}"
        )));
    }
    let n = n as f64;
    Ok((50.0 * v_hat * (v_hat + 1.0) / n).sqrt() + 75.0 * log_tk.sqrt() / n)
}

/// `σ̂ = √(50 v̂ (v̂+1) / n) + 75 √(ln TK) / n`, natural log; requires `TK ≥ 3`.
pub fn sigma_hat(v_hat: f64, n: u64, horizon: u64, k: usize) -> Result<f64> {
    let tk = horizon as f64 * k as f64;
    if tk < 3.0 {
        return Err(Error::InvalidConfig(format!("T·K = {tk} must be at least 3")));
    }
    sigma_hat_from_log(v_hat, n, tk.ln())
}

fn gaussian_moments(state: &PosteriorState, horizon: u64, k: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    state.require_offered()?;
    let mut means = Vec::with_capacity(state.num_items());
    let mut widths = Vec::with_capacity(state.num_items());
    for i in 0..state.num_items() {
        let v_hat = state.mean_estimate(i)?;
        means.push(v_hat);
        widths.push(sigma_hat(v_hat, state.epochs[i], horizon, k)?);
    }
    Ok((means, widths))
}

/// Correlated sample set from caller-supplied shared draws `θ^{(1..J)}`.
pub fn gaussian_sample_with_theta(
    state: &PosteriorState,
    horizon: u64,
    k: usize,
    theta: &[f64],
) -> Result<SampleSet> {
    if theta.is_empty() {
        return Err(Error::InvalidConfig("need at least one standard-normal draw".into()));
    }
    let (means, widths) = gaussian_moments(state, horizon, k)?;
    let mut mu = Vec::with_capacity(means.len());
    let mut z = Vec::with_capacity(means.len());
    for (m, s) in means.iter().zip(&widths) {
        let (best_z, best_mu) = argmax_sample(*m, *s, theta.iter().copied());
        mu.push(best_mu);
        z.push(best_z);
    }
    Ok(SampleSet {
        mu,
        theta: theta.to_vec(),
        z,
    })
}

/// `max_j (mean + θ_j · width)` together with the maximizing `θ_j`.
fn argmax_sample(mean: f64, width: f64, draws: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    for t in draws {
        let value = mean + t * width;
        if value > best.1 {
            best = (t, value);
        }
    }
    best
}

/// Gaussian-approximation posterior sample with `J` draws.
///
/// Correlated mode draws `θ^{(1)}..θ^{(J)}` once and shares them across
/// items; independent mode draws `J` values per item. Either way
/// `μ_i = max_j (v̂_i + θ^{(j)} σ̂_i)`.
pub fn gaussian_sample<R: Rng + ?Sized>(
    state: &PosteriorState,
    horizon: u64,
    k: usize,
    j: usize,
    correlated: bool,
    rng: &mut R,
) -> Result<SampleSet> {
    if j < 1 {
        return Err(Error::InvalidConfig("boost_samples must be at least 1".into()));
    }
    if correlated {
        state.require_offered()?;
        let theta: Vec<f64> = (0..j).map(|_| rng.sample(StandardNormal)).collect();
        return gaussian_sample_with_theta(state, horizon, k, &theta);
    }
    let (means, widths) = gaussian_moments(state, horizon, k)?;
    let n = means.len();
    let theta: Vec<f64> = (0..n * j).map(|_| rng.sample(StandardNormal)).collect();
    let mut mu = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    for i in 0..n {
        let draws = theta[i * j..(i + 1) * j].iter().copied();
        let (best_z, best_mu) = argmax_sample(means[i], widths[i], draws);
        mu.push(best_mu);
        z.push(best_z);
    }
    Ok(SampleSet { mu, theta, z })
}

/// Optimistic index `v̂ + √(24 v̂ ln(ℓ+1) / n) + 48 ln(ℓ+1) / n` for one item.
pub fn ucb_item_index(v_hat: f64, n: u64, epoch: f64) -> f64 {
    let log_term = (epoch + 1.0).ln();
    let n = n as f64;
    v_hat + (24.0 * v_hat * log_term / n).sqrt() + 48.0 * log_term / n
}

/// Confidence radius used by the UCB index (index minus `v̂`).
pub fn ucb_radius(v_hat: f64, n: u64, epoch: f64) -> f64 {
    ucb_item_index(v_hat, n, epoch) - v_hat
}

/// UCB indices for every item at epoch counter `epoch`.
pub fn ucb_index(state: &PosteriorState, epoch: f64) -> Result<Vec<f64>> {
    state.require_offered()?;
    (0..state.num_items())
        .map(|i| Ok(ucb_item_index(state.mean_estimate(i)?, state.epochs[i], epoch)))
        .collect()
}

/// Result of a policy decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub set: Assortment,
    pub samples: SampleSet,
}

/// Optimizes the assortment for given scores, clamping negatives to zero
/// first when `clamp_negative` is set.
pub fn select_from_scores(
    scores: &[f64],
    geometry: Geometry<'_>,
    clamp_negative: bool,
) -> Result<OptimizationResult> {
    if clamp_negative {
        let clamped: Vec<f64> = scores.iter().map(|&m| m.max(0.0)).collect();
        optimize(&clamped, geometry.revenues, geometry.cardinality_cap)
    } else {
        optimize(scores, geometry.revenues, geometry.cardinality_cap)
    }
}

/// Draws the policy's parameters for epoch `epoch` and returns the
/// assortment that maximizes revenue under them.
pub fn select_assortment<R: Rng + ?Sized>(
    config: &PolicyConfig,
    state: &PosteriorState,
    geometry: Geometry<'_>,
    epoch: u64,
    rng: &mut R,
) -> Result<Selection> {
    config.validate()?;
    if state.num_items() != geometry.revenues.len() {
        return Err(Error::InvalidInput(format!(
            "posterior has {} items, instance has {}",
            state.num_items(),
            geometry.revenues.len()
        )));
    }
    let (horizon, k) = (geometry.horizon, geometry.cardinality_cap);
    let samples = match config.kind {
        PolicyKind::TsBeta => beta_sample(state, rng)?,
        PolicyKind::TsGaussIndependent => gaussian_sample(state, horizon, k, 1, false, rng)?,
        PolicyKind::TsGaussCorrelated | PolicyKind::TsGaussCorrelatedBoost => {
            gaussian_sample(state, horizon, k, config.boost_samples, true, rng)?
        }
        PolicyKind::Ucb => SampleSet {
            mu: ucb_index(state, epoch as f64)?,
            ..SampleSet::default()
        },
    };
    let set = select_from_scores(&samples.mu, geometry, config.clamp_negative)?.best_set;
    Ok(Selection { set, samples })
}

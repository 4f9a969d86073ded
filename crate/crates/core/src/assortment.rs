//! Static assortment optimization: `argmax_{|S| ≤ K} R(S, w)`.
//!
//! Two exact solvers share one tie rule (lexicographically smallest index
//! set among optimal sets):
//!
//! * [`optimize_brute_force`] enumerates every subset of size at most `K`.
//!   It is the reference oracle and refuses more than [`BRUTE_FORCE_LIMIT`]
//!   items.
//! * [`optimize_threshold`] uses the fixed-point characterization
//!   `R(S) ≥ λ ⇔ Σ_{i∈S} w_i (r_i − λ) ≥ λ`. With `g(λ)` the sum of the `K`
//!   largest positive terms `w_i (r_i − λ)`, the optimal revenue is the unique
//!   root of `g(λ) = λ`, and the optimal set is the top-`K` positive terms at
//!   that root.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::mnl::{expected_revenue, Assortment};

pub const BRUTE_FORCE_LIMIT: usize = 20;
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const MAX_BISECTION_STEPS: usize = 200;
const MAX_POLISH_STEPS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub best_set: Assortment,
    pub best_value: f64,
}

fn validate(weights: &[f64], revenues: &[f64]) -> Result<()> {
    if weights.len() != revenues.len() {
        return Err(Error::InvalidInput(format!(
            "{} weights but {} revenues",
            weights.len(),
            revenues.len()
        )));
    }
    if let Some((i, w)) = weights
        .iter()
        .enumerate()
        .find(|(_, w)| !(w.is_finite() && **w >= 0.0))
    {
        return Err(Error::InvalidInput(format!(
            "weight of item {i} is {w}; weights must be finite and nonnegative"
        )));
    }
    if let Some((i, r)) = revenues
        .iter()
        .enumerate()
        .find(|(_, r)| !(r.is_finite() && **r >= 0.0))
    {
        return Err(Error::InvalidInput(format!(
            "revenue of item {i} is {r}; revenues must be finite and nonnegative"
        )));
    }
    Ok(())
}

/// Exhaustive search over all subsets of size `≤ k`, visited in
/// lexicographic order so the first strict maximum wins ties.
pub fn optimize_brute_force(
    weights: &[f64],
    revenues: &[f64],
    k: usize,
) -> Result<OptimizationResult> {
    validate(weights, revenues)?;
    let n = weights.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::SizeLimit {
            n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }

    struct Search<'a> {
        weights: &'a [f64],
        revenues: &'a [f64],
        k: usize,
        stack: Vec<usize>,
        best: Vec<usize>,
        best_value: f64,
    }

    impl Search<'_> {
        // Visits the current prefix, then every extension by a larger index.
        fn visit(&mut self, next: usize, num: f64, den: f64) {
            let value = num / den;
            if value > self.best_value {
                self.best_value = value;
                self.best.clone_from(&self.stack);
            }
            if self.stack.len() == self.k {
                return;
            }
            for i in next..self.weights.len() {
                self.stack.push(i);
                self.visit(
                    i + 1,
                    num + self.revenues[i] * self.weights[i],
                    den + self.weights[i],
                );
                self.stack.pop();
            }
        }
    }

    let mut search = Search {
        weights,
        revenues,
        k: k.min(n),
        stack: Vec::with_capacity(k),
        best: Vec::new(),
        best_value: 0.0,
    };
    search.visit(0, 0.0, 1.0);

    let best_set = Assortment::from_sorted_unchecked(search.best);
    let best_value = expected_revenue(&best_set, weights, revenues)?;
    Ok(OptimizationResult {
        best_set,
        best_value,
    })
}

/// Sum of the `k` largest strictly positive terms `w_i (r_i − λ)`.
fn top_terms_sum(weights: &[f64], revenues: &[f64], k: usize, lambda: f64, buf: &mut Vec<f64>) -> f64 {
    buf.clear();
    buf.extend(
        weights
            .iter()
            .zip(revenues)
            .map(|(w, r)| w * (r - lambda))
            .filter(|t| *t > 0.0),
    );
    if buf.len() > k {
        buf.select_nth_unstable_by(k - 1, |a, b| b.total_cmp(a));
        buf.truncate(k);
    }
    buf.iter().sum()
}

/// Items holding the `k` largest strictly positive terms at `lambda`; equal
/// terms prefer the smaller index.
fn top_terms_set(weights: &[f64], revenues: &[f64], k: usize, lambda: f64) -> Assortment {
    let mut terms: Vec<(f64, usize)> = weights
        .iter()
        .zip(revenues)
        .enumerate()
        .map(|(i, (w, r))| (w * (r - lambda), i))
        .filter(|(t, _)| *t > 0.0)
        .collect();
    terms.sort_by(|a, b| match b.0.total_cmp(&a.0) {
        Ordering::Equal => a.1.cmp(&b.1),
        ord => ord,
    });
    let mut items: Vec<usize> = terms.into_iter().take(k).map(|(_, i)| i).collect();
    items.sort_unstable();
    Assortment::from_sorted_unchecked(items)
}

/// Bisection on the revenue level `λ` followed by a short fixed-point
/// polish (`λ ← R(S_λ)`) that removes residual bisection error.
pub fn optimize_threshold(
    weights: &[f64],
    revenues: &[f64],
    k: usize,
    tolerance: f64,
) -> Result<OptimizationResult> {
    validate(weights, revenues)?;
    if tolerance.is_nan() || tolerance <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "tolerance must be positive, got {tolerance}"
        )));
    }
    let k = k.min(weights.len());
    if k == 0 {
        return Ok(OptimizationResult {
            best_set: Assortment::empty(),
            best_value: 0.0,
        });
    }

    let mut buf = Vec::with_capacity(weights.len());
    let mut lo = 0.0_f64;
    let mut hi = revenues.iter().copied().fold(0.0, f64::max);
    let mut lambda = 0.5 * (lo + hi);
    for _ in 0..MAX_BISECTION_STEPS {
        lambda = 0.5 * (lo + hi);
        let gap = top_terms_sum(weights, revenues, k, lambda, &mut buf) - lambda;
        if gap.abs() <= tolerance {
            break;
        }
        if gap > 0.0 {
            lo = lambda;
        } else {
            hi = lambda;
        }
    }

    let mut best_set = top_terms_set(weights, revenues, k, lambda);
    let mut best_value = expected_revenue(&best_set, weights, revenues)?;
    for _ in 0..MAX_POLISH_STEPS {
        let next = top_terms_set(weights, revenues, k, best_value);
        let value = expected_revenue(&next, weights, revenues)?;
        if value > best_value {
            best_set = next;
            best_value = value;
        } else {
            break;
        }
    }
    Ok(OptimizationResult {
        best_set,
        best_value,
    })
}

/// [`optimize_threshold`] at the default tolerance.
pub fn optimize(weights: &[f64], revenues: &[f64], k: usize) -> Result<OptimizationResult> {
    optimize_threshold(weights, revenues, k, DEFAULT_TOLERANCE)
}

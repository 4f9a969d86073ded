//! Ground-truth multinomial logit (MNL) choice model.
//!
//! Items are indexed `0..n`. The outside (no-purchase) option always has
//! weight one and is reported separately from the offered items. A user
//! shown assortment `S` picks item `i ∈ S` with probability
//! `v_i / (1 + Σ_{j∈S} v_j)` and the outside option with the remaining mass.

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weight of the outside option.
pub const OUTSIDE_WEIGHT: f64 = 1.0;

/// A subset of item indices offered together, stored sorted and deduplicated
/// so that equality is structural.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Assortment(Vec<usize>);

impl Assortment {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// Builds an assortment over `num_items` items. Indices may come in any
    /// order; duplicates and out-of-range indices are rejected.
    pub fn new(mut items: Vec<usize>, num_items: usize) -> Result<Self> {
        items.sort_unstable();
        if let Some(w) = items.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidAssortment(format!("duplicate item {}", w[0])));
        }
        if let Some(&last) = items.last() {
            if last >= num_items {
                return Err(Error::InvalidAssortment(format!(
                    "item {last} out of range for {num_items} items"
                )));
            }
        }
        Ok(Self(items))
    }

    /// Builds an assortment and also enforces the cardinality cap.
    pub fn with_cap(items: Vec<usize>, num_items: usize, cap: usize) -> Result<Self> {
        let set = Self::new(items, num_items)?;
        if set.len() > cap {
            return Err(Error::InvalidAssortment(format!(
                "{} items exceed cardinality cap {cap}",
                set.len()
            )));
        }
        Ok(set)
    }

    /// Wraps an already sorted, duplicate-free index list.
    pub(crate) fn from_sorted_unchecked(items: Vec<usize>) -> Self {
        debug_assert!(items.windows(2).all(|w| w[0] < w[1]));
        Self(items)
    }

    pub fn items(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, item: usize) -> bool {
        self.0.binary_search(&item).is_ok()
    }

    /// Checks the assortment against a weight vector of dimension `num_items`.
    pub fn check_range(&self, num_items: usize) -> Result<()> {
        match self.0.last() {
            Some(&last) if last >= num_items => Err(Error::InvalidAssortment(format!(
                "item {last} out of range for {num_items} items"
            ))),
            _ => Ok(()),
        }
    }
}

impl std::fmt::Display for Assortment {
    /// Space-separated item indices; empty for the empty set.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (pos, item) in self.0.iter().enumerate() {
            if pos > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{item}")?;
        }
        Ok(())
    }
}

/// Result of one user choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChoiceOutcome {
    Outside,
    Item(usize),
}

impl ChoiceOutcome {
    pub fn is_outside(self) -> bool {
        matches!(self, ChoiceOutcome::Outside)
    }
}

/// Choice probabilities over `{outside} ∪ S`; `items[k]` belongs to the
/// `k`-th element of the assortment.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceProbabilities {
    pub outside: f64,
    pub items: Vec<f64>,
}

impl ChoiceProbabilities {
    pub fn total(&self) -> f64 {
        self.outside + self.items.iter().sum::<f64>()
    }
}

fn check_weight(item: usize, w: f64) -> Result<()> {
    if w.is_finite() && w >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "weight of item {item} must be finite and nonnegative, got {w}"
        )))
    }
}

/// `1 + Σ_{j∈S} w_j`, validating every weight touched.
fn denominator(set: &Assortment, weights: &[f64]) -> Result<f64> {
    set.check_range(weights.len())?;
    let mut total = OUTSIDE_WEIGHT;
    for &i in set.items() {
        check_weight(i, weights[i])?;
        total += weights[i];
    }
    Ok(total)
}

pub fn choice_probabilities(set: &Assortment, weights: &[f64]) -> Result<ChoiceProbabilities> {
    let denom = denominator(set, weights)?;
    Ok(ChoiceProbabilities {
        outside: OUTSIDE_WEIGHT / denom,
        items: set.items().iter().map(|&i| weights[i] / denom).collect(),
    })
}

/// Expected single-step revenue `Σ_{i∈S} r_i w_i / (1 + Σ_{j∈S} w_j)`.
pub fn expected_revenue(set: &Assortment, weights: &[f64], revenues: &[f64]) -> Result<f64> {
    if weights.len() != revenues.len() {
        return Err(Error::InvalidInput(format!(
            "{} weights but {} revenues",
            weights.len(),
            revenues.len()
        )));
    }
    let denom = denominator(set, weights)?;
    Ok(set
        .items()
        .iter()
        .map(|&i| revenues[i] * (weights[i] / denom))
        .sum())
}

/// Draws one user choice from the MNL model restricted to `set`.
pub fn sample_choice<R: Rng + ?Sized>(
    set: &Assortment,
    weights: &[f64],
    rng: &mut R,
) -> Result<ChoiceOutcome> {
    let denom = denominator(set, weights)?;
    let mut u = rng.random::<f64>() * denom;
    for &i in set.items() {
        if u < weights[i] {
            return Ok(ChoiceOutcome::Item(i));
        }
        u -= weights[i];
    }
    Ok(ChoiceOutcome::Outside)
}

/// On-disk instance layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct InstanceFile {
    n: usize,
    k: usize,
    horizon: u64,
    revenues: Vec<f64>,
    weights: Vec<f64>,
}

/// A ground-truth MNL-Bandit problem.
#[derive(Debug, Clone, PartialEq)]
pub struct MnlInstance {
    revenues: Vec<f64>,
    weights: Vec<f64>,
    cardinality_cap: usize,
    horizon: u64,
}

impl MnlInstance {
    pub fn new(
        revenues: Vec<f64>,
        weights: Vec<f64>,
        cardinality_cap: usize,
        horizon: u64,
    ) -> Result<Self> {
        let n = weights.len();
        if n == 0 {
            return Err(Error::InvalidInput("instance needs at least one item".into()));
        }
        if revenues.len() != n {
            return Err(Error::InvalidInput(format!(
                "{n} weights but {} revenues",
                revenues.len()
            )));
        }
        if cardinality_cap == 0 || cardinality_cap > n {
            return Err(Error::InvalidInput(format!(
                "cardinality cap {cardinality_cap} outside [1, {n}]"
            )));
        }
        if horizon == 0 {
            return Err(Error::InvalidInput("horizon must be positive".into()));
        }
        if let Some((i, r)) = revenues
            .iter()
            .enumerate()
            .find(|(_, r)| !(0.0..=1.0).contains(*r))
        {
            return Err(Error::InvalidInput(format!(
                "revenue of item {i} is {r}, outside [0, 1]"
            )));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w > 0.0))
        {
            return Err(Error::InvalidInput(format!(
                "weight of item {i} is {w}, must be positive"
            )));
        }
        Ok(Self {
            revenues,
            weights,
            cardinality_cap,
            horizon,
        })
    }

    pub fn num_items(&self) -> usize {
        self.weights.len()
    }

    pub fn cardinality_cap(&self) -> usize {
        self.cardinality_cap
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn revenues(&self) -> &[f64] {
        &self.revenues
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Same instance with a different horizon.
    pub fn with_horizon(mut self, horizon: u64) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidInput("horizon must be positive".into()));
        }
        self.horizon = horizon;
        Ok(self)
    }

    /// Every item weight is at most the outside weight.
    pub fn satisfies_assumption1(&self) -> bool {
        self.weights.iter().all(|&w| w <= OUTSIDE_WEIGHT)
    }

    pub fn check_assumption1(&self) -> Result<()> {
        match self.weights.iter().position(|&w| w > OUTSIDE_WEIGHT) {
            Some(i) => Err(Error::InvalidInput(format!(
                "weight of item {i} is {} > 1, violating v_i <= v_0",
                self.weights[i]
            ))),
            None => Ok(()),
        }
    }

    /// `T · K`, the argument of the logarithm in the exploration terms.
    pub fn horizon_times_cap(&self) -> f64 {
        self.horizon as f64 * self.cardinality_cap as f64
    }

    pub fn expected_revenue(&self, set: &Assortment) -> Result<f64> {
        expected_revenue(set, &self.weights, &self.revenues)
    }

    pub fn to_json(&self) -> String {
        let file = InstanceFile {
            n: self.num_items(),
            k: self.cardinality_cap,
            horizon: self.horizon,
            revenues: self.revenues.clone(),
            weights: self.weights.clone(),
        };
        serde_json::to_string_pretty(&file).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)
            .map_err(|e| Error::InvalidInput(format!("malformed instance JSON: {e}")))?;
        if file.n != file.weights.len() {
            return Err(Error::InvalidInput(format!(
                "n = {} but {} weights given",
                file.n,
                file.weights.len()
            )));
        }
        Self::new(file.revenues, file.weights, file.k, file.horizon)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json() + "\n")
            .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn set(items: &[usize], n: usize) -> Assortment {
        Assortment::new(items.to_vec(), n).unwrap()
    }

    #[test]
    fn empty_set_goes_to_outside_option() {
        let p = choice_probabilities(&Assortment::empty(), &[0.3, 0.4]).unwrap();
        assert_eq!(p.outside, 1.0);
        assert!(p.items.is_empty());
        assert_eq!(expected_revenue(&Assortment::empty(), &[0.3], &[1.0]).unwrap(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let c = sample_choice(&Assortment::empty(), &[0.3], &mut rng).unwrap();
            assert_eq!(c, ChoiceOutcome::Outside);
        }
    }

    #[test]
    fn probabilities_match_hand_arithmetic() {
        let p = choice_probabilities(&set(&[0, 1], 2), &[1.0, 1.0]).unwrap();
        for x in [p.outside, p.items[0], p.items[1]] {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
        let p = choice_probabilities(&set(&[0], 1), &[0.5]).unwrap();
        assert!((p.items[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((p.outside - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn revenue_matches_hand_arithmetic() {
        let r = expected_revenue(&set(&[0], 1), &[1.0], &[1.0]).unwrap();
        assert!((r - 0.5).abs() < 1e-15);
        let r = expected_revenue(&set(&[0, 1], 2), &[0.5, 0.5], &[1.0, 0.5]).unwrap();
        assert!((r - 0.375).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_and_negative_inputs_rejected() {
        let s = set(&[0, 3], 4);
        assert!(matches!(
            choice_probabilities(&s, &[1.0, 1.0]),
            Err(Error::InvalidAssortment(_))
        ));
        assert!(matches!(
            expected_revenue(&s, &[1.0; 4], &[1.0; 3]),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            choice_probabilities(&set(&[1], 2), &[1.0, -0.1]),
            Err(Error::InvalidInput(_))
        ));
        assert!(Assortment::new(vec![1, 1], 3).is_err());
        assert!(Assortment::new(vec![3], 3).is_err());
        assert!(Assortment::with_cap(vec![0, 1, 2], 3, 2).is_err());
    }

    #[test]
    fn assortment_is_canonical() {
        assert_eq!(set(&[2, 0, 1], 3), set(&[0, 1, 2], 3));
        assert_eq!(set(&[2, 0], 3).to_string(), "0 2");
    }

    #[test]
    fn sample_choice_single_item_frequency() {
        let s = set(&[0], 1);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 1_000_000;
        let hits = (0..draws)
            .filter(|_| sample_choice(&s, &[1.0], &mut rng).unwrap() == ChoiceOutcome::Item(0))
            .count();
        let freq = hits as f64 / draws as f64;
        assert!((freq - 0.5).abs() <= 3.0 * (0.25f64 / draws as f64).sqrt());
    }

    #[test]
    fn sample_choice_is_deterministic_under_seed() {
        let s = set(&[0, 1], 2);
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            (0..200)
                .map(|_| sample_choice(&s, &[0.4, 0.9], &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn instance_validation() {
        assert!(MnlInstance::new(vec![0.5], vec![0.5], 1, 10).is_ok());
        assert!(MnlInstance::new(vec![1.5], vec![0.5], 1, 10).is_err());
        assert!(MnlInstance::new(vec![0.5], vec![0.0], 1, 10).is_err());
        assert!(MnlInstance::new(vec![0.5], vec![0.5], 2, 10).is_err());
        assert!(MnlInstance::new(vec![0.5], vec![0.5], 1, 0).is_err());
        let big = MnlInstance::new(vec![0.5], vec![2.0], 1, 10).unwrap();
        assert!(!big.satisfies_assumption1());
        assert!(big.check_assumption1().is_err());
    }

    #[test]
    fn json_schema_round_trip() {
        let inst = MnlInstance::new(vec![0.25, 1.0], vec![0.5, 0.125], 1, 99).unwrap();
        let text = inst.to_json();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["n"], 2);
        assert_eq!(value["k"], 1);
        assert_eq!(value["horizon"], 99);
        assert_eq!(MnlInstance::from_json(&text).unwrap(), inst);

        let bad = r#"{"n": 3, "k": 1, "horizon": 5, "revenues": [0.1], "weights": [0.2]}"#;
        assert!(MnlInstance::from_json(bad).is_err());
    }
}

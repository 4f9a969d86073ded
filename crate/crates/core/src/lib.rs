//! The MNL-Bandit: learning which assortment of items to show when users
//! choose according to an unknown multinomial logit model.
//!
//! * [`mnl`]: the choice model, revenue evaluation and choice sampling.
//! * [`assortment`]: exact cardinality-constrained assortment optimization.
//! * [`policy`]: Thompson Sampling variants (Beta-conjugate, Gaussian with
//!   independent, correlated and boosted sampling) and a UCB baseline.
//! * [`simulator`]: epoch-based offering against a ground-truth instance,
//!   with per-step expected regret and per-epoch diagnostics.

pub mod assortment;
pub mod error;
pub mod mnl;
pub mod policy;
pub mod simulator;

pub use assortment::{optimize, optimize_brute_force, optimize_threshold, OptimizationResult};
pub use error::{Error, Result};
pub use mnl::{
    choice_probabilities, expected_revenue, sample_choice, Assortment, ChoiceOutcome,
    ChoiceProbabilities, MnlInstance,
};
pub use policy::{PolicyConfig, PolicyKind, PosteriorState, SampleSet, Selection};
pub use simulator::{run_policy, run_simulation, EpochRecord, RegretTrajectory};

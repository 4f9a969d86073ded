use thiserror::Error;

/// Errors raised by the MNL-Bandit kernel, optimizer, policies and simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid assortment: {0}")]
    InvalidAssortment(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("brute-force optimizer refuses {n} items (limit {limit})")]
    SizeLimit { n: usize, limit: usize },

    #[error("posterior for item {item} is uninitialized (n = {epochs}, V = {picks})")]
    UninitializedPosterior { item: usize, epochs: u64, picks: u64 },

    #[error("inconsistent feedback: item {0} has picks but was not offered")]
    InconsistentFeedback(usize),

    #[error("undefined posterior moment: {0}")]
    UndefinedMoment(String),

    #[error("optimizer disagreement: threshold {threshold} vs brute force {brute_force}")]
    OptimizerMismatch { threshold: f64, brute_force: f64 },

    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;

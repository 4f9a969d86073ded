use mnl_bandit::MnlInstance;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{BenchError, Result};

/// Random instance with `v_i ~ Unif(0, 1]` and `r_i ~ Unif[0, 1)`, drawn
/// in that order (all weights first) from a ChaCha8 stream seeded by `seed`.
pub fn generate_instance(n: usize, k: usize, horizon: u64, seed: u64) -> Result<MnlInstance> {
    if n == 0 || k == 0 || k > n {
        return Err(BenchError::Config(format!(
            "need 1 <= k <= n, got n = {n}, k = {k}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (0..n).map(|_| 1.0 - rng.random::<f64>()).collect();
    let revenues: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    Ok(MnlInstance::new(revenues, weights, k, horizon)?)
}

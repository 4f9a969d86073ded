use std::path::PathBuf;

use mnl_bandit::{MnlInstance, PolicyConfig, PolicyKind};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{BenchError, Result};
use crate::generate::generate_instance;

pub const DEFAULT_N: usize = 100;
pub const DEFAULT_K: usize = 5;
pub const DEFAULT_HORIZON: u64 = 50_000;
pub const DEFAULT_RUNS: usize = 25;

const SUBSTREAM_TAG: &[u8] = b"mnl-bench/substream/v1";

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSource {
    File(PathBuf),
    Generated { n: usize, k: usize, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct BenchmarkConfig {
    pub instance: InstanceSource,
    /// Overrides the horizon stored in an instance file. Required in
    /// practice for generated instances (falls back to the desk default).
    pub horizon: Option<u64>,
    pub policies: Vec<PolicyKind>,
    pub runs: usize,
    pub master_seed: u64,
    pub out_dir: PathBuf,
    /// Worker threads; 0 means one per available core.
    pub jobs: usize,
    pub assumption1_mode: bool,
    pub epoch_logs: bool,
}

impl BenchmarkConfig {
    /// Desk-scale defaults: generated N = 100, K = 5, T = 5·10⁴, 25 runs, all policies.
    pub fn desk_scale(out_dir: impl Into<PathBuf>) -> Self {
        BenchmarkConfig {
            instance: InstanceSource::Generated {
                n: DEFAULT_N,
                k: DEFAULT_K,
                seed: 1,
            },
            horizon: Some(DEFAULT_HORIZON),
            policies: PolicyKind::ALL.to_vec(),
            runs: DEFAULT_RUNS,
            master_seed: 0,
            out_dir: out_dir.into(),
            jobs: 0,
            assumption1_mode: true,
            epoch_logs: false,
        }
    }

    pub fn load_instance(&self) -> Result<MnlInstance> {
        let inst = match &self.instance {
            InstanceSource::File(path) => {
                let inst = MnlInstance::load(path)?;
                match self.horizon {
                    Some(t) => inst.with_horizon(t)?,
                    None => inst,
                }
            }
            InstanceSource::Generated { n, k, seed } => {
                generate_instance(*n, *k, self.horizon.unwrap_or(DEFAULT_HORIZON), *seed)?
            }
        };
        Ok(inst)
    }

    /// Checks the config and returns the resolved instance.
    pub fn validate(&self) -> Result<MnlInstance> {
        if self.runs == 0 {
            return Err(BenchError::Config("runs must be at least 1".into()));
        }
        if self.policies.is_empty() {
            return Err(BenchError::Config("policy list is empty".into()));
        }
        for (i, p) in self.policies.iter().enumerate() {
            if self.policies[..i].contains(p) {
                return Err(BenchError::Config(format!("policy {p} listed twice")));
            }
        }
        let inst = self.load_instance()?;
        if inst.horizon_times_cap() < 3.0 {
            return Err(BenchError::Config(format!(
                "T·K must be at least 3, got {}",
                inst.horizon_times_cap()
            )));
        }
        if self.assumption1_mode {
            inst.check_assumption1()?;
        }
        for &kind in &self.policies {
            self.policy_config(kind, &inst).validate()?;
        }
        Ok(inst)
    }

    pub fn policy_config(&self, kind: PolicyKind, instance: &MnlInstance) -> PolicyConfig {
        PolicyConfig::new(kind, instance.cardinality_cap())
    }

    /// Hex SHA-256 of the canonical JSON of everything that determines the
    /// output bytes (resolved instance, policies, runs, seed). Thread count
    /// and output location are excluded.
    pub fn config_hash(&self, instance: &MnlInstance) -> Result<String> {
        #[derive(Serialize)]
        struct Canonical<'a> {
            instance: serde_json::Value,
            policies: Vec<&'a str>,
            runs: usize,
            master_seed: u64,
            assumption1_mode: bool,
        }
        let canonical = Canonical {
            instance: serde_json::from_str(&instance.to_json())
                .map_err(|e| BenchError::Config(e.to_string()))?,
            policies: self.policies.iter().map(|p| p.as_str()).collect(),
            runs: self.runs,
            master_seed: self.master_seed,
            assumption1_mode: self.assumption1_mode,
        };
        let bytes = serde_json::to_vec(&canonical).map_err(|e| BenchError::Config(e.to_string()))?;
        Ok(hex::encode(Sha256::digest(bytes)))
    }
}

/// `substream_id = hash(master_seed, policy_name, run_index)`: the first
/// eight bytes (little endian) of
/// SHA-256(tag ‖ master_seed LE ‖ policy_name ‖ 0x00 ‖ run_index LE).
pub fn substream_seed(master_seed: u64, policy_name: &str, run_index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(SUBSTREAM_TAG);
    h.update(master_seed.to_le_bytes());
    h.update(policy_name.as_bytes());
    h.update([0u8]);
    h.update(run_index.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("sha256 digest has 32 bytes"))
}

/// Parses a comma-separated policy list.
pub fn parse_policies(list: &str) -> Result<Vec<PolicyKind>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(BenchError::from))
        .collect()
}

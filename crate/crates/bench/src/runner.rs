use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use mnl_bandit::simulator::run_simulation;
use mnl_bandit::{MnlInstance, PolicyKind, RegretTrajectory};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{substream_seed, BenchmarkConfig};
use crate::error::{BenchError, Result};

/// Full per-step storage up to this horizon.
pub const FULL_STORAGE_LIMIT: u64 = 100_000;

/// Time points (1-based) at which trajectories are stored.
pub fn sample_grid(horizon: u64) -> Vec<u64> {
    let stride = if horizon <= FULL_STORAGE_LIMIT {
        1
    } else {
        horizon.div_ceil(FULL_STORAGE_LIMIT)
    };
    let mut grid: Vec<u64> = (1..=horizon / stride).map(|i| i * stride).collect();
    if grid.last() != Some(&horizon) {
        grid.push(horizon);
    }
    grid
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub run_index: usize,
    pub seed: u64,
    pub final_regret: f64,
    pub optimistic_fraction: f64,
    pub empty_offer_fraction: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PolicyAggregate {
    pub policy: PolicyKind,
    #[serde(skip)]
    pub mean_regret: Vec<f64>,
    #[serde(skip)]
    pub std_err: Vec<f64>,
    #[serde(skip)]
    pub per_run: Vec<Vec<f64>>,
    pub final_mean: f64,
    pub final_std_err: f64,
    pub mean_optimistic_fraction: f64,
    pub empty_offer_flagged_runs: usize,
    pub runs: Vec<RunSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AggregateResult {
    pub config_hash: String,
    pub master_seed: u64,
    pub num_items: usize,
    pub cardinality_cap: usize,
    pub horizon: u64,
    pub optimal_value: f64,
    pub optimal_set: Vec<usize>,
    #[serde(skip)]
    pub grid: Vec<u64>,
    pub policies: Vec<PolicyAggregate>,
}

impl AggregateResult {
    pub fn policy(&self, kind: PolicyKind) -> Option<&PolicyAggregate> {
        self.policies.iter().find(|p| p.policy == kind)
    }
}

struct RunOutput {
    values: Vec<f64>,
    summary: RunSummary,
    optimal_value: f64,
    optimal_set: Vec<usize>,
    epoch_log: Option<Vec<u8>>,
}

fn run_one(
    config: &BenchmarkConfig,
    instance: &MnlInstance,
    grid: &[u64],
    kind: PolicyKind,
    run_index: usize,
    seed: u64,
) -> Result<RunOutput> {
    let traj: RegretTrajectory =
        run_simulation(instance, &config.policy_config(kind, instance), seed)?;
    let values = grid
        .iter()
        .map(|&t| traj.cumulative_regret[t as usize - 1])
        .collect();
    let epoch_log = if config.epoch_logs {
        let mut buf = Vec::new();
        traj.write_epoch_log(&mut buf)
            .map_err(BenchError::io(format!("epochs_{kind}_{run_index}.csv")))?;
        Some(buf)
    } else {
        None
    };
    Ok(RunOutput {
        values,
        summary: RunSummary {
            run_index,
            seed,
            final_regret: traj.final_regret(),
            optimistic_fraction: traj.optimistic_fraction(),
            empty_offer_fraction: traj.empty_offer_fraction(),
        },
        optimal_value: traj.optimal_value,
        optimal_set: traj.optimal_set.items().to_vec(),
        epoch_log,
    })
}

fn mean_and_std_err_at(runs: &[Vec<f64>], g: usize) -> (f64, f64) {
    let n = runs.len() as f64;
    let mean = runs.iter().map(|r| r[g]).sum::<f64>() / n;
    if runs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = runs.iter().map(|r| (r[g] - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(BenchError::io(path))
}

/// Runs every (policy, replication) pair, aggregates in run order and
/// writes `run_<policy>_<idx>.csv`, `agg_<policy>.csv`, `summary.json` and
/// `instance.json` into the output directory.
pub fn run_benchmark(config: &BenchmarkConfig) -> Result<AggregateResult> {
    let instance = config.validate()?;
    let hash = config.config_hash(&instance)?;
    let grid = sample_grid(instance.horizon());

    let mut tasks = Vec::with_capacity(config.policies.len() * config.runs);
    for &kind in &config.policies {
        for run in 0..config.runs {
            tasks.push((kind, run, substream_seed(config.master_seed, kind.as_str(), run as u64)));
        }
    }
    let mut seeds: Vec<u64> = tasks.iter().map(|t| t.2).collect();
    seeds.sort_unstable();
    if seeds.windows(2).any(|w| w[0] == w[1]) {
        return Err(BenchError::Config("substream seed collision".into()));
    }

    fs::create_dir_all(&config.out_dir).map_err(BenchError::io(&config.out_dir))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| BenchError::Config(format!("thread pool: {e}")))?;
    let outputs: Vec<RunOutput> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(kind, run, seed)| run_one(config, &instance, &grid, kind, run, seed))
            .collect::<Result<Vec<_>>>()
    })?;

    let header = format!("# config_hash={hash}\n");
    let optimal_value = outputs[0].optimal_value;
    let optimal_set = outputs[0].optimal_set.clone();
    let mut policies = Vec::with_capacity(config.policies.len());
    let mut outputs = outputs.into_iter();
    for &kind in &config.policies {
        let chunk: Vec<RunOutput> = outputs.by_ref().take(config.runs).collect();
        for out in &chunk {
            let mut csv = header.clone();
            csv.push_str("t,cumulative_regret\n");
            for (t, v) in grid.iter().zip(&out.values) {
                writeln!(csv, "{t},{v}").expect("writing to a String");
            }
            let idx = out.summary.run_index;
            write_file(&config.out_dir.join(format!("run_{kind}_{idx}.csv")), csv.as_bytes())?;
            if let Some(log) = &out.epoch_log {
                let mut bytes = header.clone().into_bytes();
                bytes.extend_from_slice(log);
                write_file(&config.out_dir.join(format!("epochs_{kind}_{idx}.csv")), &bytes)?;
            }
        }

        let per_run: Vec<Vec<f64>> = chunk.iter().map(|o| o.values.clone()).collect();
        let (mean_regret, std_err): (Vec<f64>, Vec<f64>) =
            (0..grid.len()).map(|g| mean_and_std_err_at(&per_run, g)).unzip();
        let mut csv = header.clone();
        csv.push_str("t,mean_regret,std_err\n");
        for ((t, m), s) in grid.iter().zip(&mean_regret).zip(&std_err) {
            writeln!(csv, "{t},{m},{s}").expect("writing to a String");
        }
        write_file(&config.out_dir.join(format!("agg_{kind}.csv")), csv.as_bytes())?;

        let runs: Vec<RunSummary> = chunk.into_iter().map(|o| o.summary).collect();
        let n = runs.len() as f64;
        policies.push(PolicyAggregate {
            policy: kind,
            final_mean: *mean_regret.last().expect("grid is non-empty"),
            final_std_err: *std_err.last().expect("grid is non-empty"),
            mean_regret,
            std_err,
            per_run,
            mean_optimistic_fraction: runs.iter().map(|r| r.optimistic_fraction).sum::<f64>() / n,
            empty_offer_flagged_runs: runs
                .iter()
                .filter(|r| r.empty_offer_fraction > mnl_bandit::simulator::EMPTY_OFFER_FLAG)
                .count(),
            runs,
        });
    }

    let result = AggregateResult {
        config_hash: hash.clone(),
        master_seed: config.master_seed,
        num_items: instance.num_items(),
        cardinality_cap: instance.cardinality_cap(),
        horizon: instance.horizon(),
        optimal_value,
        optimal_set,
        grid,
        policies,
    };

    let mut inst_json: serde_json::Value = serde_json::from_str(&instance.to_json())
        .map_err(|e| BenchError::Config(e.to_string()))?;
    inst_json["config_hash"] = serde_json::Value::String(hash);
    write_file(&config.out_dir.join("instance.json"), to_pretty(&inst_json).as_bytes())?;
    write_file(&config.out_dir.join("summary.json"), to_pretty(&result).as_bytes())?;
    Ok(result)
}

fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

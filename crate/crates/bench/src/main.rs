use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mnl_bench::config::{DEFAULT_HORIZON, DEFAULT_K, DEFAULT_N, DEFAULT_RUNS};
use mnl_bench::{
    diagnose, generate_instance, parse_policies, run_benchmark, BenchError, BenchmarkConfig,
    DiagnoseConfig, InstanceSource,
};

#[derive(Parser)]
#[command(name = "bench", version, about = "MNL-Bandit regret benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every policy for several seeded replications and write CSVs.
    Run(RunArgs),
    /// Run the statistical diagnostic suites and print a JSON report.
    Diagnose(DiagnoseArgs),
    /// Write a random instance to a JSON file.
    GenInstance(GenArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Instance JSON file; overrides --n/--k/--gen-seed.
    #[arg(long, conflicts_with_all = ["n", "k", "gen_seed"])]
    instance: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    gen_seed: Option<u64>,
    /// Defaults to the instance file's horizon, or 50000 for generated instances.
    #[arg(long)]
    horizon: Option<u64>,
    /// Comma-separated policy names.
    #[arg(
        long,
        default_value = "ts-beta,ts-gauss-independent,ts-gauss-correlated,ts-gauss-correlated-boost,ucb"
    )]
    policies: String,
    #[arg(long, default_value_t = DEFAULT_RUNS)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long, default_value = "bench-out")]
    out: PathBuf,
    /// Also write per-epoch logs.
    #[arg(long)]
    epoch_logs: bool,
    /// Accept instances with weights above the outside weight.
    #[arg(long)]
    allow_heavy_items: bool,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated item weights for the geometric feedback check.
    #[arg(long, default_value = "0.3,0.7")]
    weights: String,
    #[arg(long, default_value_t = 100_000)]
    epochs: usize,
    #[arg(long, default_value_t = 1_000_000)]
    draws: usize,
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 20_000)]
    horizon: u64,
    #[arg(long, default_value_t = 0)]
    gen_seed: u64,
    #[arg(long, default_value = "ts-gauss-correlated-boost")]
    policy: String,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = DEFAULT_N)]
    n: usize,
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    horizon: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn run(args: RunArgs) -> Result<(), BenchError> {
    let instance = match args.instance {
        Some(path) => InstanceSource::File(path),
        None => InstanceSource::Generated {
            n: args.n.unwrap_or(DEFAULT_N),
            k: args.k.unwrap_or(DEFAULT_K),
            seed: args.gen_seed.unwrap_or(1),
        },
    };
    let config = BenchmarkConfig {
        instance,
        horizon: args.horizon,
        policies: parse_policies(&args.policies)?,
        runs: args.runs,
        master_seed: args.seed,
        out_dir: args.out,
        jobs: args.jobs,
        assumption1_mode: !args.allow_heavy_items,
        epoch_logs: args.epoch_logs,
    };
    let result = run_benchmark(&config)?;
    println!("config_hash {}", result.config_hash);
    println!("optimal_value {:.6}", result.optimal_value);
    for p in &result.policies {
        println!(
            "{:<28} final_regret {:>12.3} +/- {:.3}",
            p.policy.as_str(),
            p.final_mean,
            p.final_std_err
        );
        if p.empty_offer_flagged_runs > 0 {
            eprintln!(
                "warning: {} offered the empty set in more than 1% of epochs in {} run(s)",
                p.policy, p.empty_offer_flagged_runs
            );
        }
    }
    Ok(())
}

fn run_diagnose(args: DiagnoseArgs) -> Result<bool, BenchError> {
    let geometric_weights = args
        .weights
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| BenchError::Config(format!("bad weight {s:?}: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let config = DiagnoseConfig {
        seed: args.seed,
        geometric_weights,
        geometric_epochs: args.epochs,
        moment_draws: args.draws,
        coverage_n: args.n,
        coverage_k: args.k,
        coverage_horizon: args.horizon,
        coverage_gen_seed: args.gen_seed,
        coverage_policy: args.policy.parse()?,
        ..DiagnoseConfig::default()
    };
    let report = diagnose(&config)?;
    let text = report.to_json() + "\n";
    match args.out {
        Some(path) => std::fs::write(&path, text).map_err(|source| BenchError::Io { path, source })?,
        None => print!("{text}"),
    }
    Ok(report.passed)
}

fn gen_instance(args: GenArgs) -> Result<(), BenchError> {
    let inst = generate_instance(args.n, args.k, args.horizon, args.seed)?;
    inst.save(&args.out)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(args).map(|_| true),
        Command::Diagnose(args) => run_diagnose(args),
        Command::GenInstance(args) => gen_instance(args).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("some diagnostic checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

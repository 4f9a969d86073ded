//! Benchmark harness for MNL-Bandit policies: random instances, seeded
//! multi-run regret benchmarks with CSV output, and diagnostic suites.

pub mod config;
pub mod diagnose;
pub mod error;
pub mod generate;
pub mod runner;
pub mod stats;

pub use config::{parse_policies, substream_seed, BenchmarkConfig, InstanceSource};
pub use diagnose::{diagnose, DiagnoseConfig, DiagnosticReport};
pub use error::{BenchError, Result};
pub use generate::generate_instance;
pub use runner::{run_benchmark, sample_grid, AggregateResult, PolicyAggregate};

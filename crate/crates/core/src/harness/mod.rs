//! Experiment plumbing: configuration, multi-trial runs, oracle suites and
//! timing benchmarks.

pub mod bench;
pub mod config;
pub mod run;
pub mod verify;

pub use bench::{run_bench, write_bench, BenchConfig, BenchResult};
pub use config::{ExperimentConfig, SEED_ENV_VAR};
pub use run::{
    config_from_summary, run_experiment, write_outputs, ExperimentOutcome, PolicyOutcome,
};
pub use verify::{run_verify, SuiteReport, VerifyOptions, SUITES};

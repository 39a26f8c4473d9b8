//! Trial engine, statistics, experiment configuration and emitters.

mod config;
mod emit;
mod engine;
mod run;
mod stats;

pub use config::{
    parse_seed, AgreeConfig, CompressConfig, EqualityConfig, Experiment, ExperimentConfig, GaussianConfig,
    InfluenceConfig, ModeChoice, OutputFormat, SparseConfig, StrategyConfig,
};
pub use emit::{num, Table};
pub use engine::{count_successes, run_trials, try_run_trials, with_jobs};
pub use run::{run, run_and_write};
pub use stats::{wilson_interval, Moments, Proportion, Z95};

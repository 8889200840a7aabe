//! Experiment runner for backhaul-aware caching placement: config files, δ-sweeps over
//! strategies, CSV output and placement dumps.

pub mod config;
pub mod error;
pub mod output;
pub mod sweep;

pub use bhcache::zipf_popularity;
pub use config::{ExperimentConfig, Strategy};
pub use error::CliError;
pub use output::{csv_string, emit_csv, write_results};
pub use sweep::{run_sweep, Outcome, Row, Solved, SweepTable};

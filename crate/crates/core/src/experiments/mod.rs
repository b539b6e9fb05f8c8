//! Scenario configuration, Monte-Carlo sweeps and CSV output.

mod config;
mod par;
mod runner;
mod table;

pub use config::{load_config, parse, ExperimentConfig, Loaded, Overrides, Scenario};
pub use par::{map_trials, thread_cap, Execution};
pub use runner::{run_scenario, run_scenario_with, trial_seed, write_raw, RunOutput, TrialValue};
pub use table::{
    format_real, from_csv_bytes, mean_stderr, read_csv, to_csv_bytes, write_csv, Metric, ResultTable, Row, COLUMNS,
};

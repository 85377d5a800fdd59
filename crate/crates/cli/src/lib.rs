//! Library surface of the experiment runner, kept separate from the
//! binary so the integration tests can drive it directly.

pub mod config;
pub mod report;
pub mod runner;

pub use config::{
    dbw_to_watts, load_config, load_policy_file, watts_to_dbw, ExperimentConfig, Method, SweepSpec,
    SweepVariable,
};
pub use report::{report, write_plot_data};
pub use runner::{
    format_sig, read_csv, round_sig, run_experiment, write_csv, ResultRow, CSV_HEADER,
};

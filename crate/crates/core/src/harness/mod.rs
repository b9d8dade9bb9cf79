//! Experiment harness: configuration, presets, seeded ensembles, quantile
//! aggregation, CSV output and the command-line interface.

pub mod cli;
pub mod config;
pub mod csv;
pub mod presets;
pub mod runset;

pub use cli::{cli_main, run_cli};
pub use config::{parse_config, parse_config_str, ExperimentKind, ExperimentSpec};
pub use csv::{emit_csv, read_csv, render_csv};
pub use presets::{preset, PRESETS};
pub use runset::{run_experiment, summarize, MetricSummary, RunSet, Stats};

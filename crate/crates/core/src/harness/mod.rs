//! Configuration loading, scenario runs with CSV/JSON artifacts, plot data and
//! the acceptance suite.

pub mod accept;
pub mod config;
pub mod output;
pub mod run;

pub use accept::{accept, accept_with, format_table, AcceptOptions, SUITES};
pub use config::{load_config, load_config_with_seed, Kind, MacroModelSpec, ScenarioConfig, SCHEMA_VERSION};
pub use output::{emit_plot_data, PlotSource, Series};
pub use run::{micro_stats, output_root, run, Check, MicroStats, RunReport, OUT_ENV};

use crate::error::Error;

/// Process exit status for an error: 2 for configuration problems, 3 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_) | Error::Json(_) => 2,
        _ => 3,
    }
}

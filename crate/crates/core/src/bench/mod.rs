//! Sweep harness behind the `bench` binary: configuration, the per-size
//! runners, CSV output and exit codes.

mod cli;
mod config;
mod run;

pub use cli::{main_with_args, Cli};
pub use config::{
    default_start, parse_sizes, Command, ExperimentConfig, GraphFamily, Schedule, Start, UMode,
    DEFAULT_EPS, DEFAULT_T_MULT,
};
pub use run::{
    build_graph, deterministic_section, median_targets, run, Row, RunRecord, BOUND_SLACK,
};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BOUND: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// I/O failures map to [`EXIT_IO`]; every other error is a configuration
/// problem.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

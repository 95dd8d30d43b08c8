//! Command-line harness for the self-improving sorter: generation, training,
//! sorting, verification, benchmarking, and model inspection, with seeded
//! reproducible runs and machine-readable reports.

pub mod commands;
pub mod config;
pub mod error;
pub mod modelfile;
pub mod report;
pub mod specfile;

pub use commands::{
    cmd_bench, cmd_gen, cmd_inspect, cmd_sort, cmd_train_linear, cmd_train_mixture, cmd_verify,
    VerifySummary,
};
pub use config::{OutputFormat, RunConfig};
pub use error::{CliError, Result};
pub use report::{Aggregates, BenchReport, ReportRow};

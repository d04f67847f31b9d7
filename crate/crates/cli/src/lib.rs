//! Pipeline driver behind the `cpprot` binary.

pub mod cli;
pub mod config;
pub mod pipeline;
pub mod report;

pub use cli::{execute, Cli};
pub use config::RunConfig;
pub use pipeline::{run_pipeline, run_stage, Outcome, Stage};
pub use report::{render_report, render_table, SchemeCosts};

//! Scenario configuration and execution.

pub mod config;
pub mod runner;

pub use config::{paper_suite, parse_number, shape_from_params, Problems, ScenarioConfig, ShapeSource};
pub use runner::{
    evaluate, prepare, run, run_batch, solve, write_matrices, write_report, Finding, Outcome, Prepared, RunOptions,
    ScenarioReport, Solved, SpectrumEntry,
};

//! Experiment harness for the qubit state-preparation benchmarks: TOML
//! configuration, seeded parallel runs, figure sweeps and their CSV/JSON
//! outputs, and the command-line front end.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod runner;

pub use config::{BenchConfig, Overrides};
pub use error::{BenchError, Result};
pub use output::{FigureOutput, Point, Record};
pub use runner::{run_point, run_single, Algorithm, Summary};

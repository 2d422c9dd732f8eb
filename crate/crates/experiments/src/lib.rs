//! Experiment harness for the `ermtree` planners.
//!
//! Runs the risky/safe benchmark comparisons and convergence curves under a
//! plan-then-execute protocol, the bandit concentration checks, and backs the
//! `ermtree` command-line tool.

pub mod cli;
pub mod concentration;
pub mod config;
pub mod episode;
mod error;
pub mod output;
pub mod seeds;
pub mod stats;
pub mod table;

pub use config::{Algorithm, ExperimentConfig, MdpSource};
pub use error::{ExpError, Result};
pub use stats::{bootstrap_erm_ci, ErmInterval};
pub use table::{run_convergence_curve, run_table1, ExperimentResult, TableRun};

//! Batch driver for the gradient-flow solvers: configuration, experiment
//! orchestration and CSV output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::Config;
pub use error::{CliError, Result};

/// Exit code for a completed run whose invariant checks failed.
pub const EXIT_INVARIANT: u8 = 4;

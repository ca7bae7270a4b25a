//! Config parsing, experiment runs, u-sweeps and the check suite behind the
//! `nhota` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::result_large_err)]

pub mod check;
pub mod config;
pub mod experiment;

pub use config::{ConfigError, ExperimentConfig, ProblemKind, SEED_ENV};
pub use experiment::{CliError, RunReport, TRACE_HEADER};

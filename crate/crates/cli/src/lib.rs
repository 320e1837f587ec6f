//! Experiment runner for the `smi` binary: configuration, sweeps over
//! frames, targets and SNR, precoder optimisation and CSV output.

// NaN must fail these checks, so negated comparisons are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod precoder_io;

pub use cli::{execute, run, Cli};
pub use config::{Command, ConfigFile, ExperimentConfig, Overrides, Profile, Units};
pub use error::CliError;

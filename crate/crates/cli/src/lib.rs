// SPDX-License-Identifier: MIT OR Apache-2.0

//! Config parsing and subcommands behind the `imbts` binary.

pub mod cli;
pub mod commands;
pub mod config;

pub use commands::{cmd_evaluate, cmd_fit, cmd_sample, cmd_select, cmd_synth, cmd_weights};
pub use config::PipelineConfig;

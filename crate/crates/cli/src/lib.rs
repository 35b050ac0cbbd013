//! Library half of the `smoothcert` command-line tool: argument types,
//! configuration merging, CSV datasets, JSONL record files and the
//! subcommand implementations.

pub mod args;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod failure;
pub mod records;

pub use failure::Failure;

//! File formats, measurement harness and command-line interface for
//! `reluforge-core`.
//!
//! * [`format`]: lossless JSON network documents.
//! * [`harness`]: grid sup-errors, log-log fits, growth tables and CSV
//!   export.
//! * [`constructions`]: the named constructions behind `build` and
//!   `verify`.
//! * [`cli`]: argument parsing, config files and exit codes.
#![forbid(unsafe_code)]
#![warn(missing_docs)]

pub mod cli;
pub mod constructions;
mod error;
pub mod format;
pub mod harness;

pub use error::{Error, Result};
pub use reluforge_core as core;

//! File formats, reports and the command driver on top of `llave_core`.

pub mod report;
pub mod run;
pub mod schema;

pub use run::{execute, run, Command, Format, Output, Overrides, PrecisionArg, RunConfig, RunError};

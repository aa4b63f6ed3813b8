//! Command implementations behind the `rankq` binary.

pub mod commands;
pub mod report;

pub use commands::{evaluate_sequence, Evaluation};

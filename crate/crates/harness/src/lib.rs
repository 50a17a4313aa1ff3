//! Experiment harness for the `pcmdp` crate: configuration, multi-seed
//! runs, CSV output, aggregation, checkpoints and the verification oracles.

pub mod aggregate;
pub mod checkpoint;
pub mod config;
pub mod csv_io;
pub mod error;
pub mod oracle;
pub mod runner;
pub mod scaling;
pub mod seeding;
pub mod verify;

pub use error::{HarnessError, Result};

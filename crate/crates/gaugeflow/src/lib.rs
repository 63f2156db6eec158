//! File formats, the benchmark harness and the command-line front end for
//! [`gaugeflow_core`].

pub mod bench;
pub mod checkpoint;
pub mod cli;
pub mod dataset_io;
pub mod diagnose;
mod error;
pub mod metrics;
pub mod report;

pub use error::{Error, Result};

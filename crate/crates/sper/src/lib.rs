//! Harness around `sper-core`: CSV ingestion, synthetic candidate streams,
//! the end-to-end pipeline with phase timings, CSV reports and the `sper`
//! command line.

pub mod cli;
mod error;
pub mod ingest;
pub mod pipeline;
pub mod report;
pub mod sweep;
pub mod synth;

pub use error::{Error, Result};
pub use sper_core as core;

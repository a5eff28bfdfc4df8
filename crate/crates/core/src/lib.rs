pub mod agent;
pub mod analogs;
pub mod baselines;
pub mod canonical;
pub mod cli;
pub mod config;
pub mod consolidation;
pub mod enrichment;
pub mod error;
pub mod evaluation;
pub mod footprint;
pub mod geometry;
pub mod ingest;
pub mod perception;
pub mod pipeline;
pub mod spatial;
pub mod synthetic;
pub mod units;

pub use error::{Error, Result};

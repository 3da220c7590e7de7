//! Experiment runners, file formats, charts and the command-line surface
//! built on `robust-elicit-core`.

pub mod chart;
pub mod cli;
pub mod config;
pub mod dataset_io;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod report;

pub use error::{HarnessError, Result};
pub use metrics::{MetricName, MetricRow};

//! Benchmark harness for spectral mixture GP inference: series ingestion,
//! synthetic generators, experiment orchestration and CSV reports.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod data;
pub mod error;
pub mod experiment;
pub mod report;
pub mod synth;

pub use config::{ExperimentConfig, Method, Task};
pub use error::{BenchError, Result};
pub use experiment::{run_experiment, JobOutput, ResultRow};

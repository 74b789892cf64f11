//! Synthetic tabular populations with controlled historical, measurement,
//! representation and omission biases, plus a harness that trains a random
//! forest, a blinded forest and a parity-equalized forest on each of 25
//! bias combinations and reports accuracy and demographic-parity metrics.

pub mod dataset;
pub mod error;
pub mod generator;
pub mod harness;
pub mod metrics;
pub mod models;
pub mod sampling;
pub mod views;

pub use error::{Error, Result};
pub use generator::{GeneratorParams, PipelineBias, Population, ScenarioId, ScenarioPresets};
pub use sampling::RngStream;

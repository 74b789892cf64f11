//! The 5 x 5 experiment matrix: configuration, execution, calibration and
//! reporting.

pub mod calibrate;
pub mod config;
pub mod report;
pub mod run;

pub use calibrate::{calibrate, CalibrationOptions, CalibrationOutcome, CalibrationTargets};
pub use config::{ExperimentConfig, HarnessParams, SHIPPED_CONFIG};
pub use report::{emit_report, render, summarize_repeats, ReportFormat, SummaryRow};
pub use run::{run_cell, run_cells, run_matrix, run_repeats, ExperimentCell, ModelKind, ResultRow};

use std::fmt;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::dataset::{split_indices, SplitSpec};
use crate::error::{Error, Result};
use crate::generator::{
    apply_representation_bias, generate_population, scenario_params, PipelineBias, ScenarioId,
};
use crate::metrics::{dp_of_target, evaluate, MetricsReport};
use crate::models::{apply_thresholds, fit_dp_thresholds, fit_forest};
use crate::sampling::RngStream;
use crate::views::materialize_views;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExperimentCell {
    pub scenario: ScenarioId,
    pub pipeline_bias: PipelineBias,
}

impl ExperimentCell {
    /// All 25 cells, scenario-major.
    pub fn all() -> Vec<ExperimentCell> {
        ScenarioId::ALL
            .into_iter()
            .flat_map(|scenario| {
                PipelineBias::ALL.into_iter().map(move |pipeline_bias| ExperimentCell {
                    scenario,
                    pipeline_bias,
                })
            })
            .collect()
    }

    /// Label of the cell's root random stream.
    pub fn stream_label(&self) -> String {
        format!("cell/{}/{}", self.scenario, self.pipeline_bias)
    }
}

impl fmt::Display for ExperimentCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.scenario, self.pipeline_bias)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "RF")]
    Rf,
    #[serde(rename = "BRF")]
    Brf,
    #[serde(rename = "ERF")]
    Erf,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Rf, ModelKind::Brf, ModelKind::Erf];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Rf => "RF",
            ModelKind::Brf => "BRF",
            ModelKind::Erf => "ERF",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub cell: ExperimentCell,
    pub rf: MetricsReport,
    pub brf: MetricsReport,
    pub erf: MetricsReport,
    /// Demographic-parity gap of the true `Y` on the evaluation rows, in pp.
    pub dp_of_true_target: f64,
    pub seed: u64,
    /// Rows generated before any undersampling.
    pub n_samples: usize,
    pub n_train: usize,
    pub n_test: usize,
}

impl ResultRow {
    pub fn model(&self, kind: ModelKind) -> &MetricsReport {
        match kind {
            ModelKind::Rf => &self.rf,
            ModelKind::Brf => &self.brf,
            ModelKind::Erf => &self.erf,
        }
    }
}

/// Generates, biases, splits, trains RF/BRF/ERF and scores them on the test
/// part against the true target. Every random draw comes from streams
/// derived from `(root_seed, cell)`.
pub fn run_cell(cell: ExperimentCell, config: &ExperimentConfig, root_seed: u64) -> Result<ResultRow> {
    let stream = RngStream::new(root_seed, cell.stream_label());
    let params = scenario_params(cell.scenario, &config.generator, &config.presets);

    let mut pop = generate_population(&params, &mut stream.derive("gen"))?;
    if cell.pipeline_bias == PipelineBias::RepresentationA {
        pop = apply_representation_bias(
            &pop,
            params.p_u,
            params.conditioned_undersampling,
            &mut stream.derive("undersample"),
        )?;
    }

    let split = SplitSpec {
        train_fraction: config.harness.train_fraction,
        rng: stream.derive("split"),
    };
    let (train_rows, test_rows) = split_indices(pop.len(), &split)?;
    let train = pop.select(&train_rows);
    let test = pop.select(&test_rows);

    let rf_train = materialize_views(&train, cell.pipeline_bias, false);
    let rf_test = materialize_views(&test, cell.pipeline_bias, false);
    let brf_train = materialize_views(&train, cell.pipeline_bias, true);
    let brf_test = materialize_views(&test, cell.pipeline_bias, true);

    let rf = fit_forest(&rf_train, &config.forest, &stream.derive("forest/rf"))?;
    let brf = fit_forest(&brf_train, &config.forest, &stream.derive("forest/brf"))?;
    debug_assert!(!brf.uses_feature("A"));

    let rf_test_scores = rf.predict_view_scores(&rf_test)?;
    let rf_pred: Vec<u8> = rf_test_scores.iter().map(|&s| u8::from(s > 0.5)).collect();
    let brf_pred = brf.predict_labels(&brf_test.feature_names, &brf_test.features)?;

    let rf_train_scores = rf.predict_view_scores(&rf_train)?;
    let thresholds = fit_dp_thresholds(&rf_train_scores, &rf_train.train_target, &rf_train.group)?;
    let erf_pred = apply_thresholds(&rf_test_scores, &rf_test.group, &thresholds)?;

    let truth = &rf_test.eval_target;
    let groups = &rf_test.group;
    Ok(ResultRow {
        cell,
        rf: evaluate(&rf_pred, truth, groups)?,
        brf: evaluate(&brf_pred, truth, groups)?,
        erf: evaluate(&erf_pred, truth, groups)?,
        dp_of_true_target: dp_of_target(&test.y, &test.a)?,
        seed: root_seed,
        n_samples: params.n_samples,
        n_train: train.len(),
        n_test: test.len(),
    })
}

fn thread_pool(parallelism: usize) -> Result<rayon::ThreadPool> {
    if parallelism == 0 {
        return Err(Error::invalid("parallelism must be >= 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start {parallelism} workers: {e}")))
}

/// Runs `cells` on `parallelism` worker threads; output follows input order.
pub fn run_cells(
    cells: &[ExperimentCell],
    config: &ExperimentConfig,
    root_seed: u64,
    parallelism: usize,
) -> Result<Vec<ResultRow>> {
    config.validate()?;
    thread_pool(parallelism)?.install(|| {
        cells
            .par_iter()
            .map(|&cell| {
                run_cell(cell, config, root_seed).map_err(|e| Error::Cell {
                    cell: cell.to_string(),
                    source: Box::new(e),
                })
            })
            .collect()
    })
}

pub fn run_matrix(config: &ExperimentConfig, root_seed: u64, parallelism: usize) -> Result<Vec<ResultRow>> {
    run_cells(&ExperimentCell::all(), config, root_seed, parallelism)
}

/// Root seed of repeat `index`; repeat 0 is the plain seed.
pub fn repeat_seed(root_seed: u64, index: usize) -> u64 {
    if index == 0 {
        root_seed
    } else {
        RngStream::new(root_seed, format!("repeat/{index}")).next_u64()
    }
}

pub fn run_repeats(
    config: &ExperimentConfig,
    root_seed: u64,
    parallelism: usize,
    repeats: usize,
) -> Result<Vec<Vec<ResultRow>>> {
    if repeats == 0 {
        return Err(Error::invalid("repeats must be >= 1"));
    }
    (0..repeats)
        .map(|k| run_matrix(config, repeat_seed(root_seed, k), parallelism))
        .collect()
}

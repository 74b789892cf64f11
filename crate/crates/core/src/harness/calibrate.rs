//! Tunes the decision threshold and the per-scenario historical-bias
//! magnitudes so the demographic-parity gap of the true target hits given
//! values.
//!
//! Each scenario has one free magnitude: III scales `beta_r_h`, IV scales
//! `beta_y_h`, V scales `(beta_r_h, beta_y_h)` along their current
//! direction, and II moves `beta_q_h` against a fixed `beta_r_h`. The gap is
//! evaluated with a fixed stream, so every evaluation sees the same noise
//! and the objective is a smooth, monotone function of the magnitude. The
//! search scans a logarithmic grid for a sign change and then bisects in log
//! space.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::generator::{generate_population, scenario_params, GeneratorParams, ScenarioId};
use crate::metrics::dp_of_target;
use crate::sampling::RngStream;

/// Target gap of the true `Y`, in pp, per scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTargets(pub BTreeMap<ScenarioId, f64>);

impl CalibrationTargets {
    pub fn reference() -> CalibrationTargets {
        CalibrationTargets(BTreeMap::from([
            (ScenarioId::I, 0.0),
            (ScenarioId::II, 0.9),
            (ScenarioId::III, 5.0),
            (ScenarioId::IV, 12.0),
            (ScenarioId::V, 7.0),
        ]))
    }

    /// Flat `SCENARIO = value` lines, e.g. `III = 5.0`.
    pub fn parse(text: &str) -> Result<CalibrationTargets> {
        let flat: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(format!("targets: {e}")))?;
        let mut out = BTreeMap::new();
        for (key, value) in flat {
            let id: ScenarioId = key
                .parse()
                .map_err(|_| Error::Config(format!("targets: unknown scenario {key:?}")))?;
            let v = value
                .as_float()
                .or_else(|| value.as_integer().map(|i| i as f64))
                .ok_or_else(|| Error::Config(format!("targets: {key} must be a number")))?;
            out.insert(id, v);
        }
        Ok(CalibrationTargets(out))
    }

    pub fn load(path: &Path) -> Result<CalibrationTargets> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        CalibrationTargets::parse(&text)
    }
}

#[derive(Clone, Debug)]
pub struct CalibrationOptions {
    pub n_samples: usize,
    pub seed: u64,
    /// Stop bisecting once the gap is within this many pp of the target.
    pub tolerance_pp: f64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            n_samples: 100_000,
            seed: 20_230_101,
            tolerance_pp: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOutcome {
    pub scenario: ScenarioId,
    pub target_pp: f64,
    pub achieved_pp: f64,
    pub magnitude: f64,
}

fn stream(opts: &CalibrationOptions, what: &str) -> RngStream {
    RngStream::new(opts.seed, format!("calibrate/{what}"))
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// Gap of the true target for `scenario` under `config`.
pub fn target_gap(config: &ExperimentConfig, scenario: ScenarioId, opts: &CalibrationOptions) -> Result<f64> {
    let params = GeneratorParams {
        n_samples: opts.n_samples,
        ..scenario_params(scenario, &config.generator, &config.presets)
    };
    let pop = generate_population(&params, &mut stream(opts, "population"))?;
    dp_of_target(&pop.y, &pop.a)
}

/// Sets the magnitude of `scenario`'s free knob(s). `dir` carries the sign
/// (and for V the direction) taken from the starting presets.
fn set_magnitude(config: &mut ExperimentConfig, scenario: ScenarioId, dir: (f64, f64), m: f64) {
    let p = &mut config.presets;
    match scenario {
        ScenarioId::I => {}
        ScenarioId::II => p.ii_beta_q_h = dir.0 * m,
        ScenarioId::III => p.iii_beta_r_h = dir.0 * m,
        ScenarioId::IV => p.iv_beta_y_h = dir.0 * m,
        ScenarioId::V => {
            p.v_beta_r_h = dir.0 * m;
            p.v_beta_y_h = dir.1 * m;
        }
    }
}

fn direction(config: &ExperimentConfig, scenario: ScenarioId) -> (f64, f64) {
    let sign = |v: f64| if v < 0.0 { -1.0 } else { 1.0 };
    let p = &config.presets;
    match scenario {
        ScenarioId::I => (0.0, 0.0),
        ScenarioId::II => (sign(p.ii_beta_q_h), 0.0),
        ScenarioId::III => (sign(p.iii_beta_r_h), 0.0),
        ScenarioId::IV => (sign(p.iv_beta_y_h), 0.0),
        ScenarioId::V => {
            let norm = p.v_beta_r_h.hypot(p.v_beta_y_h);
            if norm > 0.0 {
                (p.v_beta_r_h / norm, p.v_beta_y_h / norm)
            } else {
                (std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2)
            }
        }
    }
}

const GRID_LO: f64 = 1e-3;
const GRID_HI: f64 = 20.0;
const GRID_POINTS: usize = 60;
const BISECTION_STEPS: usize = 60;

fn calibrate_scenario(
    config: &mut ExperimentConfig,
    scenario: ScenarioId,
    target: f64,
    opts: &CalibrationOptions,
) -> Result<CalibrationOutcome> {
    let dir = direction(config, scenario);
    let eval = |config: &mut ExperimentConfig, m: f64| -> Result<f64> {
        set_magnitude(config, scenario, dir, m);
        Ok(target_gap(config, scenario, opts)? - target)
    };

    let ratio = (GRID_HI / GRID_LO).powf(1.0 / (GRID_POINTS - 1) as f64);
    let mut prev_m = 0.0;
    let mut prev_f = eval(config, 0.0)?;
    let mut bracket = None;
    let mut m = GRID_LO;
    for _ in 0..GRID_POINTS {
        let f = eval(config, m)?;
        if f == 0.0 || f.signum() != prev_f.signum() {
            bracket = Some((prev_m, prev_f, m, f));
            break;
        }
        prev_m = m;
        prev_f = f;
        m *= ratio;
    }
    let Some((mut lo, f_lo, mut hi, _)) = bracket else {
        return Err(Error::Config(format!(
            "scenario {scenario}: target {target} pp is not reachable with magnitudes up to {GRID_HI}"
        )));
    };

    for _ in 0..BISECTION_STEPS {
        let mid = if lo > 0.0 { (lo * hi).sqrt() } else { hi / 2.0 };
        let f = eval(config, mid)?;
        if f.abs() <= opts.tolerance_pp {
            lo = mid;
            hi = mid;
            break;
        }
        if f.signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let magnitude = (lo * hi).sqrt().max(lo);
    let achieved = eval(config, magnitude)? + target;
    Ok(CalibrationOutcome {
        scenario,
        target_pp: target,
        achieved_pp: achieved,
        magnitude,
    })
}

/// Returns `config` with `s_bar` reset to the median of `S` under scenario I
/// and every targeted scenario's magnitude tuned.
pub fn calibrate(
    config: &ExperimentConfig,
    targets: &CalibrationTargets,
    opts: &CalibrationOptions,
) -> Result<(ExperimentConfig, Vec<CalibrationOutcome>)> {
    config.validate()?;
    let mut out = config.clone();

    let params = GeneratorParams {
        n_samples: opts.n_samples,
        ..scenario_params(ScenarioId::I, &out.generator, &out.presets)
    };
    let pop = generate_population(&params, &mut stream(opts, "s_bar"))?;
    out.generator.s_bar = median(pop.s);

    let mut outcomes = Vec::new();
    for (&scenario, &target) in &targets.0 {
        let outcome = if scenario == ScenarioId::I {
            CalibrationOutcome {
                scenario,
                target_pp: target,
                achieved_pp: target_gap(&out, scenario, opts)?,
                magnitude: 0.0,
            }
        } else {
            calibrate_scenario(&mut out, scenario, target, opts)?
        };
        outcomes.push(outcome);
    }
    Ok((out, outcomes))
}

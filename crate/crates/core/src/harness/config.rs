//! Flat `key = value` configuration (TOML syntax, no tables).
//!
//! Every field of [`GeneratorParams`], [`ScenarioPresets`], [`ForestParams`]
//! and [`HarnessParams`] is a top-level key; omitted keys keep their
//! built-in defaults and unknown keys are rejected.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{GeneratorParams, ScenarioPresets};
use crate::models::ForestParams;

/// Calibrated configuration shipped with the crate.
pub const SHIPPED_CONFIG: &str = include_str!("../../config/default.conf");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessParams {
    pub train_fraction: f64,
    /// Rows per cell in quick mode.
    pub quick_n_samples: usize,
}

impl Default for HarnessParams {
    fn default() -> Self {
        HarnessParams {
            train_fraction: crate::dataset::DEFAULT_TRAIN_FRACTION,
            quick_n_samples: 20_000,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentConfig {
    pub generator: GeneratorParams,
    pub presets: ScenarioPresets,
    pub forest: ForestParams,
    pub harness: HarnessParams,
}

fn keys_of<T: Serialize + Default>() -> Vec<String> {
    match toml::Value::try_from(T::default()) {
        Ok(toml::Value::Table(t)) => t.keys().cloned().collect(),
        _ => unreachable!("config sections serialize to tables"),
    }
}

fn section<T: DeserializeOwned>(table: toml::Table, what: &str) -> Result<T> {
    toml::Value::Table(table)
        .try_into()
        .map_err(|e| Error::Config(format!("{what}: {e}")))
}

impl ExperimentConfig {
    pub fn shipped() -> ExperimentConfig {
        ExperimentConfig::parse(SHIPPED_CONFIG).expect("shipped config is valid")
    }

    pub fn parse(text: &str) -> Result<ExperimentConfig> {
        let flat: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(format!("syntax: {e}")))?;

        let sections = [
            keys_of::<GeneratorParams>(),
            keys_of::<ScenarioPresets>(),
            keys_of::<ForestParams>(),
            keys_of::<HarnessParams>(),
        ];
        let mut parts: [toml::Table; 4] = Default::default();
        for (key, value) in flat {
            if value.is_table() {
                return Err(Error::Config(format!(
                    "key {key:?} opens a table; the config must be flat"
                )));
            }
            let idx = sections
                .iter()
                .position(|keys| keys.contains(&key))
                .ok_or_else(|| Error::Config(format!("unknown key {key:?}")))?;
            parts[idx].insert(key, value);
        }
        let [g, p, f, h] = parts;
        let config = ExperimentConfig {
            generator: section(g, "generator")?,
            presets: section(p, "scenario presets")?,
            forest: section(f, "forest")?,
            harness: section(h, "harness")?,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ExperimentConfig::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| Error::Config(e.to_string());
        self.generator.validate().map_err(wrap)?;
        self.forest.validate().map_err(wrap)?;
        let f = self.harness.train_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::Config(format!("train_fraction {f} outside (0, 1)")));
        }
        if self.harness.quick_n_samples < 2 {
            return Err(Error::Config("quick_n_samples must be >= 2".into()));
        }
        let presets = [
            self.presets.ii_beta_r_h,
            self.presets.ii_beta_q_h,
            self.presets.iii_beta_r_h,
            self.presets.iv_beta_y_h,
            self.presets.v_beta_r_h,
            self.presets.v_beta_y_h,
        ];
        if presets.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("scenario presets must be finite".into()));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        fn block<T: Serialize>(title: &str, v: &T) -> String {
            let body = toml::to_string(v).expect("config sections serialize");
            format!("# {title}\n{body}\n")
        }
        [
            block("generator", &self.generator),
            block("historical-bias magnitudes per scenario", &self.presets),
            block("random forest", &self.forest),
            block("harness", &self.harness),
        ]
        .concat()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    /// Copy with `n_samples` replaced by the quick-mode size.
    pub fn quick(&self) -> ExperimentConfig {
        let mut c = self.clone();
        c.generator.n_samples = self.harness.quick_n_samples;
        c
    }
}

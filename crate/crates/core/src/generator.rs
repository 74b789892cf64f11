//! Structural model for the synthetic population and the bias injectors that
//! act on it.
//!
//! Per row, in this order:
//!
//! ```text
//! A   ~ Bernoulli(p_a)
//! R   = -beta_r_h * A + N(mu_r, sigma_r^2)
//! Q   ~ Binomial(k, sigmoid(-(alpha_rq * R - beta_q_h * A)))
//! S   = alpha_r * R - alpha_q * Q - beta_y_h * A + N(0, sigma_s^2)
//! Y   = 1{S > s_bar}
//! P_R = R - beta_r_m * A + N(0, sigma_pr^2)
//! P_S = S - beta_y_m * A + N(0, sigma_ps^2)
//! P_Y = 1{P_S > s_bar}
//! ```
//!
//! The `beta_*_h` knobs inject historical bias into the phenomenon itself,
//! the `beta_*_m` knobs shift the proxies, and `p_u` drives undersampling of
//! the `A = 1` group.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{Column, Table};
use crate::error::{Error, Result};
use crate::sampling::{
    bernoulli_unchecked, binomial_unchecked, gaussian_unchecked, sigmoid_unchecked, RngStream,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorParams {
    pub n_samples: usize,
    pub p_a: f64,
    pub beta_r_h: f64,
    pub mu_r: f64,
    pub sigma_r: f64,
    pub k: u32,
    pub alpha_rq: f64,
    pub beta_q_h: f64,
    pub alpha_r: f64,
    pub alpha_q: f64,
    pub beta_y_h: f64,
    pub sigma_s: f64,
    pub s_bar: f64,
    pub beta_r_m: f64,
    pub sigma_pr: f64,
    pub beta_y_m: f64,
    pub sigma_ps: f64,
    pub p_u: f64,
    pub conditioned_undersampling: bool,
}

impl Default for GeneratorParams {
    /// Structural knobs with no historical bias; `s_bar` here is only the
    /// analytic mean of `S` and is replaced by calibration.
    fn default() -> Self {
        GeneratorParams {
            n_samples: 100_000,
            p_a: 0.5,
            beta_r_h: 0.0,
            mu_r: 0.0,
            sigma_r: 1.0,
            k: 4,
            alpha_rq: 0.3,
            beta_q_h: 0.0,
            alpha_r: 1.0,
            alpha_q: 0.3,
            beta_y_h: 0.0,
            sigma_s: 0.5,
            s_bar: -0.6,
            beta_r_m: 0.5,
            sigma_pr: 0.55,
            beta_y_m: 0.5,
            sigma_ps: 0.5,
            p_u: 0.5,
            conditioned_undersampling: false,
        }
    }
}

impl GeneratorParams {
    pub fn validate(&self) -> Result<()> {
        let reals = [
            ("p_a", self.p_a),
            ("beta_r_h", self.beta_r_h),
            ("mu_r", self.mu_r),
            ("sigma_r", self.sigma_r),
            ("alpha_rq", self.alpha_rq),
            ("beta_q_h", self.beta_q_h),
            ("alpha_r", self.alpha_r),
            ("alpha_q", self.alpha_q),
            ("beta_y_h", self.beta_y_h),
            ("sigma_s", self.sigma_s),
            ("s_bar", self.s_bar),
            ("beta_r_m", self.beta_r_m),
            ("sigma_pr", self.sigma_pr),
            ("beta_y_m", self.beta_y_m),
            ("sigma_ps", self.sigma_ps),
            ("p_u", self.p_u),
        ];
        if let Some((name, v)) = reals.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::invalid(format!("{name} must be finite, got {v}")));
        }
        for (name, v) in [
            ("sigma_r", self.sigma_r),
            ("sigma_s", self.sigma_s),
            ("sigma_pr", self.sigma_pr),
            ("sigma_ps", self.sigma_ps),
        ] {
            if v < 0.0 {
                return Err(Error::invalid(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(self.p_a > 0.0 && self.p_a < 1.0) {
            return Err(Error::invalid(format!("p_a must lie in (0, 1), got {}", self.p_a)));
        }
        if !(self.p_u > 0.0 && self.p_u <= 1.0) {
            return Err(Error::invalid(format!("p_u must lie in (0, 1], got {}", self.p_u)));
        }
        if self.k == 0 {
            return Err(Error::invalid("k must be >= 1"));
        }
        if self.n_samples == 0 {
            return Err(Error::invalid("n_samples must be >= 1"));
        }
        Ok(())
    }

    /// Argument of the sigmoid that sets the success probability of `Q`.
    #[inline]
    pub fn q_logit(&self, r: f64, a: u8) -> f64 {
        -(self.alpha_rq * r - self.beta_q_h * f64::from(a))
    }
}

/// The five users-to-data scenarios.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScenarioId {
    I,
    II,
    III,
    IV,
    V,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 5] = [
        ScenarioId::I,
        ScenarioId::II,
        ScenarioId::III,
        ScenarioId::IV,
        ScenarioId::V,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioId::I => "I",
            ScenarioId::II => "II",
            ScenarioId::III => "III",
            ScenarioId::IV => "IV",
            ScenarioId::V => "V",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ScenarioId::I => "no historical bias",
            ScenarioId::II => "historical bias with compensation",
            ScenarioId::III => "historical bias on R",
            ScenarioId::IV => "historical bias on Y",
            ScenarioId::V => "historical bias on R and Y",
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioId::ALL
            .into_iter()
            .find(|id| id.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::invalid(format!("unknown scenario {s:?} (expected I..V)")))
    }
}

/// The five data-to-algorithm variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PipelineBias {
    None,
    MeasurementR,
    OmissionR,
    RepresentationA,
    MeasurementY,
}

impl PipelineBias {
    pub const ALL: [PipelineBias; 5] = [
        PipelineBias::None,
        PipelineBias::MeasurementR,
        PipelineBias::OmissionR,
        PipelineBias::RepresentationA,
        PipelineBias::MeasurementY,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PipelineBias::None => "none",
            PipelineBias::MeasurementR => "measurement-r",
            PipelineBias::OmissionR => "omission-r",
            PipelineBias::RepresentationA => "representation-a",
            PipelineBias::MeasurementY => "measurement-y",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            PipelineBias::None => "no additional bias",
            PipelineBias::MeasurementR => "P_R substitutes R",
            PipelineBias::OmissionR => "R is omitted",
            PipelineBias::RepresentationA => "A=1 undersampled",
            PipelineBias::MeasurementY => "P_Y substitutes Y",
        }
    }
}

impl fmt::Display for PipelineBias {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PipelineBias {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        PipelineBias::ALL
            .into_iter()
            .find(|b| b.as_str() == key)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown pipeline bias {s:?} (expected one of none, measurement-r, \
                     omission-r, representation-a, measurement-y)"
                ))
            })
    }
}

/// Historical-bias magnitudes for each scenario. Scenario I has none by
/// definition; the others are set by calibration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioPresets {
    pub ii_beta_r_h: f64,
    pub ii_beta_q_h: f64,
    pub iii_beta_r_h: f64,
    pub iv_beta_y_h: f64,
    pub v_beta_r_h: f64,
    pub v_beta_y_h: f64,
}

impl Default for ScenarioPresets {
    fn default() -> Self {
        ScenarioPresets {
            ii_beta_r_h: 0.3,
            ii_beta_q_h: -1.5,
            iii_beta_r_h: 0.15,
            iv_beta_y_h: 0.5,
            v_beta_r_h: 0.1,
            v_beta_y_h: 0.15,
        }
    }
}

/// `base` with the historical-bias knobs of `scenario` applied; every other
/// field is left as given.
pub fn scenario_params(
    scenario: ScenarioId,
    base: &GeneratorParams,
    presets: &ScenarioPresets,
) -> GeneratorParams {
    let (r, q, y) = match scenario {
        ScenarioId::I => (0.0, 0.0, 0.0),
        ScenarioId::II => (presets.ii_beta_r_h, presets.ii_beta_q_h, 0.0),
        ScenarioId::III => (presets.iii_beta_r_h, 0.0, 0.0),
        ScenarioId::IV => (0.0, 0.0, presets.iv_beta_y_h),
        ScenarioId::V => (presets.v_beta_r_h, 0.0, presets.v_beta_y_h),
    };
    GeneratorParams {
        beta_r_h: r,
        beta_q_h: q,
        beta_y_h: y,
        ..base.clone()
    }
}

pub const POPULATION_COLUMNS: [&str; 8] = ["A", "R", "Q", "S", "Y", "P_R", "P_S", "P_Y"];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Population {
    pub a: Vec<u8>,
    pub r: Vec<f64>,
    pub q: Vec<u32>,
    pub s: Vec<f64>,
    pub y: Vec<u8>,
    pub p_r: Vec<f64>,
    pub p_s: Vec<f64>,
    pub p_y: Vec<u8>,
}

impl Population {
    fn with_capacity(n: usize) -> Self {
        Population {
            a: Vec::with_capacity(n),
            r: Vec::with_capacity(n),
            q: Vec::with_capacity(n),
            s: Vec::with_capacity(n),
            y: Vec::with_capacity(n),
            p_r: Vec::with_capacity(n),
            p_s: Vec::with_capacity(n),
            p_y: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn count_group(&self, group: u8) -> usize {
        self.a.iter().filter(|&&a| a == group).count()
    }

    /// Rows `rows`, in that order.
    pub fn select(&self, rows: &[usize]) -> Population {
        Population {
            a: rows.iter().map(|&i| self.a[i]).collect(),
            r: rows.iter().map(|&i| self.r[i]).collect(),
            q: rows.iter().map(|&i| self.q[i]).collect(),
            s: rows.iter().map(|&i| self.s[i]).collect(),
            y: rows.iter().map(|&i| self.y[i]).collect(),
            p_r: rows.iter().map(|&i| self.p_r[i]).collect(),
            p_s: rows.iter().map(|&i| self.p_s[i]).collect(),
            p_y: rows.iter().map(|&i| self.p_y[i]).collect(),
        }
    }

    pub fn to_table(&self) -> Table {
        Table::new(vec![
            ("A".into(), Column::Binary(self.a.clone())),
            ("R".into(), Column::Real(self.r.clone())),
            ("Q".into(), Column::Integer(self.q.iter().map(|&q| i64::from(q)).collect())),
            ("S".into(), Column::Real(self.s.clone())),
            ("Y".into(), Column::Binary(self.y.clone())),
            ("P_R".into(), Column::Real(self.p_r.clone())),
            ("P_S".into(), Column::Real(self.p_s.clone())),
            ("P_Y".into(), Column::Binary(self.p_y.clone())),
        ])
        .expect("population columns have equal length")
    }

    pub fn from_table(table: &Table) -> Result<Population> {
        let get = |name: &str| {
            table
                .column(name)
                .ok_or_else(|| Error::invalid(format!("population table lacks column {name}")))
        };
        let binary = |name: &str| -> Result<Vec<u8>> {
            let col = get(name)?;
            col.to_f64()
                .into_iter()
                .map(|v| match v {
                    0.0 => Ok(0),
                    1.0 => Ok(1),
                    v => Err(Error::invalid(format!("column {name} holds non-binary value {v}"))),
                })
                .collect()
        };
        let integer = |name: &str| -> Result<Vec<u32>> {
            get(name)?
                .to_f64()
                .into_iter()
                .map(|v| {
                    if v >= 0.0 && v.fract() == 0.0 && v <= f64::from(u32::MAX) {
                        Ok(v as u32)
                    } else {
                        Err(Error::invalid(format!("column {name} holds invalid count {v}")))
                    }
                })
                .collect()
        };
        Ok(Population {
            a: binary("A")?,
            r: get("R")?.to_f64(),
            q: integer("Q")?,
            s: get("S")?.to_f64(),
            y: binary("Y")?,
            p_r: get("P_R")?.to_f64(),
            p_s: get("P_S")?.to_f64(),
            p_y: binary("P_Y")?,
        })
    }
}

pub fn generate_population(params: &GeneratorParams, rng: &mut RngStream) -> Result<Population> {
    params.validate()?;
    let n = params.n_samples;
    let mut pop = Population::with_capacity(n);
    for _ in 0..n {
        let a = bernoulli_unchecked(params.p_a, rng);
        let af = f64::from(a);
        let r = -params.beta_r_h * af + gaussian_unchecked(params.mu_r, params.sigma_r, rng);
        let p_q = sigmoid_unchecked(params.q_logit(r, a));
        let q = binomial_unchecked(params.k, p_q, rng);
        let s = params.alpha_r * r - params.alpha_q * f64::from(q) - params.beta_y_h * af
            + gaussian_unchecked(0.0, params.sigma_s, rng);
        let y = u8::from(s > params.s_bar);
        let p_r = r - params.beta_r_m * af + gaussian_unchecked(0.0, params.sigma_pr, rng);
        let p_s = s - params.beta_y_m * af + gaussian_unchecked(0.0, params.sigma_ps, rng);
        let p_y = u8::from(p_s > params.s_bar);

        pop.a.push(a);
        pop.r.push(r);
        pop.q.push(q);
        pop.s.push(s);
        pop.y.push(y);
        pop.p_r.push(p_r);
        pop.p_s.push(p_s);
        pop.p_y.push(p_y);
    }
    Ok(pop)
}

/// Number of `A = 1` rows kept when undersampling to ratio `p_u`.
pub fn undersampled_count(p_u: f64, n_majority: usize) -> usize {
    (p_u * n_majority as f64).round() as usize
}

/// Keeps every `A = 0` row and `round(p_u * |A=0|)` of the `A = 1` rows,
/// either uniformly at random or, when `conditioned`, the ones with the
/// lowest `R` (ties by row index). Retained rows keep their original order.
pub fn apply_representation_bias(
    pop: &Population,
    p_u: f64,
    conditioned: bool,
    rng: &mut RngStream,
) -> Result<Population> {
    if !(p_u > 0.0 && p_u <= 1.0) {
        return Err(Error::invalid(format!("p_u must lie in (0, 1], got {p_u}")));
    }
    let minority: Vec<usize> = (0..pop.len()).filter(|&i| pop.a[i] == 1).collect();
    let n_majority = pop.len() - minority.len();
    let keep = undersampled_count(p_u, n_majority);
    if keep > minority.len() {
        return Err(Error::InfeasibleUndersampling {
            requested: keep,
            available: minority.len(),
        });
    }
    if keep == 0 {
        return Err(Error::invalid(format!(
            "undersampling with p_u={p_u} over {n_majority} majority rows keeps no A=1 rows"
        )));
    }

    let mut kept: Vec<usize> = if conditioned {
        let mut by_r = minority;
        by_r.sort_by(|&i, &j| pop.r[i].total_cmp(&pop.r[j]).then(i.cmp(&j)));
        by_r.truncate(keep);
        by_r
    } else {
        rand::seq::index::sample(rng, minority.len(), keep)
            .into_iter()
            .map(|j| minority[j])
            .collect()
    };
    kept.sort_unstable();

    let mut rows: Vec<usize> = (0..pop.len()).filter(|&i| pop.a[i] == 0).collect();
    rows.extend(kept);
    rows.sort_unstable();
    Ok(pop.select(&rows))
}

use std::fmt;

use rayon::prelude::*;
use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};

use super::tree::{DecisionTree, TreeSettings};
use crate::error::{Error, Result};
use crate::sampling::RngStream;
use crate::views::ModelView;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeaturesPerSplit {
    /// `floor(sqrt(d))`, at least 1.
    Sqrt,
    Count(usize),
}

impl FeaturesPerSplit {
    fn resolve(self, n_features: usize) -> Result<usize> {
        match self {
            FeaturesPerSplit::Sqrt => Ok(((n_features as f64).sqrt().floor() as usize).max(1)),
            FeaturesPerSplit::Count(0) => Err(Error::invalid("features_per_split must be >= 1")),
            FeaturesPerSplit::Count(m) if m > n_features => Err(Error::invalid(format!(
                "features_per_split {m} exceeds the {n_features} available features"
            ))),
            FeaturesPerSplit::Count(m) => Ok(m),
        }
    }
}

impl fmt::Display for FeaturesPerSplit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeaturesPerSplit::Sqrt => f.write_str("sqrt"),
            FeaturesPerSplit::Count(m) => write!(f, "{m}"),
        }
    }
}

impl Serialize for FeaturesPerSplit {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            FeaturesPerSplit::Sqrt => s.serialize_str("sqrt"),
            FeaturesPerSplit::Count(m) => s.serialize_u64(*m as u64),
        }
    }
}

impl<'de> Deserialize<'de> for FeaturesPerSplit {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(u64),
            Name(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(m) => Ok(FeaturesPerSplit::Count(m as usize)),
            Raw::Name(s) if s.eq_ignore_ascii_case("sqrt") => Ok(FeaturesPerSplit::Sqrt),
            Raw::Name(s) => Err(de::Error::custom(format!(
                "features_per_split must be \"sqrt\" or a positive integer, got {s:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub features_per_split: FeaturesPerSplit,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: 8,
            min_samples_leaf: 5,
            features_per_split: FeaturesPerSplit::Sqrt,
            bootstrap: true,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::invalid("n_trees must be >= 1"));
        }
        if self.max_depth == 0 {
            return Err(Error::invalid("max_depth must be >= 1"));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::invalid("min_samples_leaf must be >= 1"));
        }
        if self.features_per_split == FeaturesPerSplit::Count(0) {
            return Err(Error::invalid("features_per_split must be >= 1"));
        }
        Ok(())
    }
}

/// Bagged ensemble of Gini trees. Scores are vote fractions.
#[derive(Clone, Debug, PartialEq)]
pub struct Forest {
    feature_names: Vec<String>,
    trees: Vec<DecisionTree>,
}

impl Forest {
    pub fn from_trees(feature_names: Vec<String>, trees: Vec<DecisionTree>) -> Result<Forest> {
        if trees.is_empty() {
            return Err(Error::invalid("a forest needs at least one tree"));
        }
        Ok(Forest {
            feature_names,
            trees,
        })
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn uses_feature(&self, name: &str) -> bool {
        self.feature_names.iter().any(|n| n == name)
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    /// Fraction of trees voting class 1, per row. `features` is
    /// column-major and must match the training signature.
    pub fn predict_scores(&self, names: &[String], features: &[Vec<f64>]) -> Result<Vec<f64>> {
        if names != self.feature_names.as_slice() {
            return Err(Error::invalid(format!(
                "feature signature {names:?} does not match the trained {:?}",
                self.feature_names
            )));
        }
        if features.len() != names.len() {
            return Err(Error::invalid("feature columns do not match their names"));
        }
        let n = features.first().map_or(0, Vec::len);
        if features.iter().any(|c| c.len() != n) {
            return Err(Error::invalid("ragged feature matrix"));
        }
        let n_trees = self.trees.len() as f64;
        Ok((0..n)
            .into_par_iter()
            .map_init(
                || vec![0.0; features.len()],
                |row, i| {
                    for (slot, col) in row.iter_mut().zip(features) {
                        *slot = col[i];
                    }
                    let votes: usize = self
                        .trees
                        .iter()
                        .map(|t| t.predict_row(row) as usize)
                        .sum();
                    votes as f64 / n_trees
                },
            )
            .collect())
    }

    pub fn predict_view_scores(&self, view: &ModelView) -> Result<Vec<f64>> {
        self.predict_scores(&view.feature_names, &view.features)
    }

    /// Labels at the plain 0.5 cut: class 1 when more than half the trees
    /// vote for it.
    pub fn predict_labels(&self, names: &[String], features: &[Vec<f64>]) -> Result<Vec<u8>> {
        Ok(self
            .predict_scores(names, features)?
            .into_iter()
            .map(|s| u8::from(s > 0.5))
            .collect())
    }
}

/// Fits on `view.features` against `view.train_target`. Tree `i` draws from
/// `rng.derive("tree/i")`, so the result does not depend on thread count.
pub fn fit_forest(view: &ModelView, params: &ForestParams, rng: &RngStream) -> Result<Forest> {
    params.validate()?;
    let n = view.train_target.len();
    if view.features.is_empty() {
        return Err(Error::invalid("cannot fit a forest without features"));
    }
    if n < 2 {
        return Err(Error::invalid(format!("cannot fit a forest on {n} rows")));
    }
    if view.features.iter().any(|c| c.len() != n) {
        return Err(Error::invalid("feature columns and target differ in length"));
    }
    if let Some(v) = view.train_target.iter().find(|&&y| y > 1) {
        return Err(Error::invalid(format!("non-binary target value {v}")));
    }
    let settings = TreeSettings {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf as f64,
        features_per_split: params.features_per_split.resolve(view.features.len())?,
    };

    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut tree_rng = rng.derive(&format!("tree/{t}"));
            let weights = if params.bootstrap {
                let mut w = vec![0.0; n];
                for _ in 0..n {
                    w[tree_rng.next_index(n)] += 1.0;
                }
                w
            } else {
                vec![1.0; n]
            };
            DecisionTree::fit(&view.features, &view.train_target, &weights, &settings, &mut tree_rng)
        })
        .collect();

    Ok(Forest {
        feature_names: view.feature_names.clone(),
        trees,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn view(features: Vec<Vec<f64>>, names: &[&str], y: Vec<u8>) -> ModelView {
        let n = y.len();
        ModelView {
            feature_names: names.iter().map(|s| s.to_string()).collect(),
            features,
            eval_target: y.clone(),
            train_target: y,
            group: (0..n).map(|i| (i % 2) as u8).collect(),
        }
    }

    fn small_params(n_trees: usize, depth: usize) -> ForestParams {
        ForestParams {
            n_trees,
            max_depth: depth,
            min_samples_leaf: 1,
            ..ForestParams::default()
        }
    }

    #[test]
    fn separable_data_is_fit_perfectly() {
        let x: Vec<f64> = (-50..50).map(|i| f64::from(i) / 10.0).collect();
        let y: Vec<u8> = x.iter().map(|&v| u8::from(v >= 0.0)).collect();
        let v = view(vec![x], &["x"], y.clone());
        let f = fit_forest(&v, &small_params(10, 2), &RngStream::new(1, "f")).unwrap();
        let pred = f.predict_labels(&v.feature_names, &v.features).unwrap();
        assert_eq!(pred, y);
    }

    #[test]
    fn constant_target_gives_constant_scores() {
        for label in [0u8, 1] {
            let x: Vec<f64> = (0..30).map(f64::from).collect();
            let v = view(vec![x], &["x"], vec![label; 30]);
            let f = fit_forest(&v, &small_params(5, 4), &RngStream::new(2, "f")).unwrap();
            let s = f.predict_view_scores(&v).unwrap();
            assert!(s.iter().all(|&s| s == f64::from(label)));
        }
    }

    #[test]
    fn single_tree_scores_are_binary() {
        let x: Vec<f64> = (0..40).map(|i| f64::from(i * 7 % 13)).collect();
        let y: Vec<u8> = (0..40).map(|i| (i % 3 == 0) as u8).collect();
        let v = view(vec![x], &["x"], y);
        let f = fit_forest(&v, &small_params(1, 3), &RngStream::new(3, "f")).unwrap();
        assert!(f.predict_view_scores(&v).unwrap().iter().all(|&s| s == 0.0 || s == 1.0));
    }

    #[test]
    fn duplicated_tree_keeps_scores() {
        let x: Vec<f64> = (0..40).map(|i| f64::from(i * 7 % 13)).collect();
        let y: Vec<u8> = (0..40).map(|i| (i % 3 == 0) as u8).collect();
        let v = view(vec![x], &["x"], y);
        let one = fit_forest(&v, &small_params(1, 3), &RngStream::new(3, "f")).unwrap();
        let ten = Forest::from_trees(v.feature_names.clone(), vec![one.trees()[0].clone(); 10]).unwrap();
        assert_eq!(one.predict_view_scores(&v).unwrap(), ten.predict_view_scores(&v).unwrap());
    }

    #[test]
    fn vote_fraction_of_four_trees() {
        let trees = [1u8, 1, 0, 1].map(DecisionTree::constant).to_vec();
        let f = Forest::from_trees(vec!["x".into()], trees).unwrap();
        assert_eq!(f.predict_scores(&["x".into()], &[vec![0.0]]).unwrap(), vec![0.75]);
    }

    #[test]
    fn always_one_tree_weakly_raises_scores() {
        let x: Vec<f64> = (0..60).map(|i| f64::from(i * 11 % 17)).collect();
        let y: Vec<u8> = (0..60).map(|i| (i % 4 == 0) as u8).collect();
        let v = view(vec![x], &["x"], y);
        let f = fit_forest(&v, &small_params(7, 3), &RngStream::new(4, "f")).unwrap();
        let mut trees = f.trees().to_vec();
        trees.push(DecisionTree::constant(1));
        let g = Forest::from_trees(f.feature_names().to_vec(), trees).unwrap();
        let before = f.predict_view_scores(&v).unwrap();
        let after = g.predict_view_scores(&v).unwrap();
        assert!(before.iter().zip(&after).all(|(b, a)| a >= b));
    }

    #[test]
    fn signature_mismatch_is_rejected() {
        let v = view(vec![vec![0.0, 1.0, 2.0, 3.0]], &["R"], vec![0, 0, 1, 1]);
        let f = fit_forest(&v, &small_params(2, 2), &RngStream::new(5, "f")).unwrap();
        assert!(f.predict_scores(&["P_R".into()], &v.features).is_err());
        assert!(!f.uses_feature("A"));
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let rng = RngStream::new(6, "f");
        let empty = view(vec![], &[], vec![0, 1]);
        assert!(fit_forest(&empty, &ForestParams::default(), &rng).is_err());
        let one_row = view(vec![vec![1.0]], &["x"], vec![1]);
        assert!(fit_forest(&one_row, &ForestParams::default(), &rng).is_err());
        let ok = view(vec![vec![1.0, 2.0]], &["x"], vec![0, 1]);
        let too_many = ForestParams {
            features_per_split: FeaturesPerSplit::Count(2),
            ..ForestParams::default()
        };
        assert!(fit_forest(&ok, &too_many, &rng).is_err());
        let no_trees = ForestParams {
            n_trees: 0,
            ..ForestParams::default()
        };
        assert!(fit_forest(&ok, &no_trees, &rng).is_err());
    }

    #[test]
    fn fitting_is_deterministic() {
        let x1: Vec<f64> = (0..200).map(|i| f64::from(i * 37 % 101)).collect();
        let x2: Vec<f64> = (0..200).map(|i| f64::from(i * 53 % 89)).collect();
        let y: Vec<u8> = (0..200).map(|i| u8::from((i * 37 % 101) + (i * 53 % 89) > 95)).collect();
        let v = view(vec![x1, x2], &["a", "b"], y);
        let p = small_params(20, 4);
        let f1 = fit_forest(&v, &p, &RngStream::new(7, "f")).unwrap();
        let f2 = fit_forest(&v, &p, &RngStream::new(7, "f")).unwrap();
        assert_eq!(f1, f2);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let f3 = pool.install(|| fit_forest(&v, &p, &RngStream::new(7, "f")).unwrap());
        assert_eq!(f1, f3);
    }

    #[test]
    fn features_per_split_serde() {
        #[derive(Deserialize, Serialize)]
        struct W {
            m: FeaturesPerSplit,
        }
        let w: W = toml::from_str("m = \"sqrt\"").unwrap();
        assert_eq!(w.m, FeaturesPerSplit::Sqrt);
        let w: W = toml::from_str("m = 2").unwrap();
        assert_eq!(w.m, FeaturesPerSplit::Count(2));
        assert!(toml::from_str::<W>("m = \"log2\"").is_err());
        assert_eq!(toml::to_string(&W { m: FeaturesPerSplit::Sqrt }).unwrap().trim(), "m = \"sqrt\"");
    }
}

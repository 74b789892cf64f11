//! Feature/target views: what each model variant is allowed to see.

use crate::generator::{PipelineBias, Population};

/// Column-major feature matrix plus targets and the group vector.
///
/// `group` is always the true `A`, also when `A` is not a feature, so
/// fairness metrics can be computed for blinded models.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelView {
    pub feature_names: Vec<String>,
    pub features: Vec<Vec<f64>>,
    pub train_target: Vec<u8>,
    pub eval_target: Vec<u8>,
    pub group: Vec<u8>,
}

impl ModelView {
    pub fn n_rows(&self) -> usize {
        self.group.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    /// Feature values of one row, in `feature_names` order.
    pub fn row(&self, i: usize) -> Vec<f64> {
        self.features.iter().map(|col| col[i]).collect()
    }
}

/// Builds the view of `pop` seen under `bias`. Representation bias changes
/// which rows exist, not which columns are visible, so it is handled before
/// this step.
pub fn materialize_views(pop: &Population, bias: PipelineBias, blinded: bool) -> ModelView {
    let mut feature_names = Vec::with_capacity(3);
    let mut features = Vec::with_capacity(3);

    if !blinded {
        feature_names.push("A".to_string());
        features.push(pop.a.iter().map(|&a| f64::from(a)).collect());
    }
    match bias {
        PipelineBias::OmissionR => {}
        PipelineBias::MeasurementR => {
            feature_names.push("P_R".to_string());
            features.push(pop.p_r.clone());
        }
        _ => {
            feature_names.push("R".to_string());
            features.push(pop.r.clone());
        }
    }
    feature_names.push("Q".to_string());
    features.push(pop.q.iter().map(|&q| f64::from(q)).collect());

    let train_target = match bias {
        PipelineBias::MeasurementY => pop.p_y.clone(),
        _ => pop.y.clone(),
    };

    ModelView {
        feature_names,
        features,
        train_target,
        eval_target: pop.y.clone(),
        group: pop.a.clone(),
    }
}

//! Random-forest scorer and the demographic-parity post-processor. The three
//! experiment variants are built from these: RF sees every feature, BRF is
//! the same forest fit on a view without `A`, ERF thresholds RF scores per
//! group.

mod forest;
mod thresholds;
mod tree;

pub use forest::{fit_forest, FeaturesPerSplit, Forest, ForestParams};
pub use thresholds::{apply_thresholds, fit_dp_thresholds, GroupThresholds, GRID_STEPS};
pub use tree::{DecisionTree, Node};

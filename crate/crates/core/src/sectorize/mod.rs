//! Traffic-snapshot feature extraction and grid-configuration scoring.

mod features;
mod scoring;

pub use features::{extract_features, FeatureVector, FEATURE_NAMES};
pub use scoring::{
    label_optimal_grid, score_all_grids, score_grid, GridObjectiveBreakdown, ObjectiveWeights,
    GRID_CHOICES_PER_AXIS,
};

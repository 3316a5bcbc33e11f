//! From observation tables to dense numeric matrices.

mod assemble;
mod matrix;
mod neighbors;
mod pipeline;
mod target;
mod time;

use thiserror::Error;

pub use assemble::{fit_features, FittedFeatures, KnnReference, TextColumnModel, KNN_NAMES, TEXT_COLUMNS};
pub use matrix::FeatureMatrix;
pub use neighbors::{
    build_neighbor_index, neighbor_mean_features, neighbor_means_for_points, KnnScaler, NeighborIndex, NeighborMeans,
    NeighborMode,
};
pub use pipeline::{
    apply_feature_pipeline, fit_feature_pipeline, raw_categorical, raw_numeric,
    CategoricalColumnModel, FeatureConfig, FeaturePipelineModel, NumericColumnModel,
    CATEGORICAL_COLUMNS, NUMERIC_COLUMNS,
};
pub use target::{bin_target, TargetClass};
pub use time::{decompose_time, decompose_time_str, epoch_seconds, TimeFeatures, TimeOfDay};

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("cannot parse timestamp `{0}`")]
    Time(String),
    #[error("target is missing")]
    MissingTarget,
    #[error("unknown or unavailable column `{0}`")]
    Column(String),
    #[error("empty training table")]
    EmptyTable,
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("need at least 2 indexed rows, found {0}")]
    InsufficientData(usize),
    #[error("non-finite value in column `{column}` at row {row}")]
    NonFinite { column: String, row: usize },
    #[error("matrix shape: {0}")]
    Shape(String),
    #[error("csv: {0}")]
    Csv(String),
}

impl From<csv::Error> for FeatureError {
    fn from(e: csv::Error) -> Self {
        FeatureError::Csv(e.to_string())
    }
}

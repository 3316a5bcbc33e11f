//! Fold assignment, cross-validation with out-of-fold predictions, the
//! micro-averaged metric family and the exploratory statistics.

mod cv;
mod folds;
mod metrics;
mod oof;
mod stats;

use thiserror::Error;

pub use cv::{
    fit_full, fit_training_features, labelled_rows, run_cv, run_cv_with, run_cv_with_folds, CvOptions, CvOutput, TrainedPipeline,
};
pub(crate) use metrics::micro_f1;
pub use folds::{random_folds, stratified_folds, FoldAssignment};
pub use metrics::{classification_metrics, MetricsReport};
pub use oof::{read_oof_csv, write_oof_csv, OofPredictions};
pub use stats::{annual_trend, pearson, write_trend_csv, YearMean};

#[derive(Debug, Error, PartialEq)]
pub enum ValidationError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input")]
    Empty,
    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),
    #[error("no labelled rows to train on")]
    NoLabels,
    #[error("oof csv: {0}")]
    Csv(String),
}

impl From<csv::Error> for ValidationError {
    fn from(e: csv::Error) -> Self {
        ValidationError::Csv(e.to_string())
    }
}

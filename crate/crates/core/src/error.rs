use thiserror::Error;

use crate::{
    dataset::DatasetError, ensemble::EnsembleError, features::FeatureError,
    learners::LearnerError, linalg::LinalgError, svg::SvgError, textfeat::TextError,
    validation::ValidationError,
};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Svg(#[from] SvgError),
    #[error("fold {fold}: {source}")]
    InFold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },
}

//! Native multiclass tree ensembles emitting class-probability matrices.

mod binning;
mod forest;
mod gbdt;
mod tree;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use binning::FeatureBins;
pub use forest::{fit_forest, predict_proba_forest, ClassificationTree, ForestModel, ForestNode, ForestParams};
pub use gbdt::{
    fit_gbdt, predict_proba_gbdt, softmax_gradient, GbdtModel, GbdtParams, RoundLog,
};
pub use tree::{best_root_split, RegressionTree, SplitChoice, TreeNode};

use crate::features::FeatureMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum LearnerError {
    #[error("{rows} feature rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("no training rows")]
    Empty,
    #[error("label {label} outside 0..{n_classes}")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("feature columns do not match the model's")]
    SchemaMismatch,
    #[error("non-finite feature at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },
}

/// Row-major `rows × classes` probability matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityMatrix {
    n_classes: usize,
    data: Vec<f64>,
}

impl ProbabilityMatrix {
    pub fn new(n_classes: usize, data: Vec<f64>) -> Self {
        assert!(n_classes > 0 && data.len() % n_classes == 0);
        ProbabilityMatrix { n_classes, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n_classes = rows.first().map_or(1, Vec::len);
        ProbabilityMatrix::new(n_classes, rows.concat())
    }

    pub fn zeros(n_rows: usize, n_classes: usize) -> Self {
        ProbabilityMatrix::new(n_classes, vec![0.0; n_rows * n_classes])
    }

    pub fn n_rows(&self) -> usize {
        self.data.len() / self.n_classes
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_classes..(i + 1) * self.n_classes]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.n_classes..(i + 1) * self.n_classes]
    }

    /// Most probable class of row `i`; ties go to the lowest class id.
    pub fn argmax(&self, i: usize) -> usize {
        argmax(self.row(i))
    }

    pub fn predicted_classes(&self) -> Vec<usize> {
        (0..self.n_rows()).map(|i| self.argmax(i)).collect()
    }

    pub fn select_rows(&self, rows: &[usize]) -> ProbabilityMatrix {
        let mut data = Vec::with_capacity(rows.len() * self.n_classes);
        for &i in rows {
            data.extend_from_slice(self.row(i));
        }
        ProbabilityMatrix::new(self.n_classes, data)
    }
}

pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = k;
        }
    }
    best
}

/// Mean negative log-likelihood of the true classes, probabilities floored
/// at 1e-15.
pub fn log_loss(p: &ProbabilityMatrix, y: &[usize]) -> f64 {
    let n = y.len().max(1) as f64;
    y.iter()
        .enumerate()
        .map(|(i, &c)| -p.row(i)[c].max(1e-15).ln())
        .sum::<f64>()
        / n
}

/// Either learner behind one interface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LearnerSpec {
    Gbdt(GbdtParams),
    Forest(ForestParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Model {
    Gbdt(GbdtModel),
    Forest(ForestModel),
}

impl LearnerSpec {
    pub fn validate(&self) -> Result<(), LearnerError> {
        match self {
            LearnerSpec::Gbdt(p) => p.validate(),
            LearnerSpec::Forest(p) => p.validate(),
        }
    }

    pub fn fit(
        &self,
        x: &FeatureMatrix,
        y: &[usize],
        n_classes: usize,
        validation: Option<(&FeatureMatrix, &[usize])>,
    ) -> Result<Model, LearnerError> {
        match self {
            LearnerSpec::Gbdt(p) => fit_gbdt(x, y, n_classes, p, validation).map(Model::Gbdt),
            LearnerSpec::Forest(p) => fit_forest(x, y, n_classes, p).map(Model::Forest),
        }
    }
}

impl Model {
    pub fn predict_proba(&self, x: &FeatureMatrix) -> Result<ProbabilityMatrix, LearnerError> {
        match self {
            Model::Gbdt(m) => predict_proba_gbdt(m, x),
            Model::Forest(m) => predict_proba_forest(m, x),
        }
    }

    pub fn feature_names(&self) -> &[String] {
        match self {
            Model::Gbdt(m) => &m.feature_names,
            Model::Forest(m) => &m.feature_names,
        }
    }
}

pub(crate) fn check_training_input(
    x: &FeatureMatrix,
    y: &[usize],
    n_classes: usize,
) -> Result<(), LearnerError> {
    if x.n_rows() != y.len() {
        return Err(LearnerError::LengthMismatch {
            rows: x.n_rows(),
            labels: y.len(),
        });
    }
    if y.is_empty() {
        return Err(LearnerError::Empty);
    }
    if let Some(&label) = y.iter().find(|&&c| c >= n_classes) {
        return Err(LearnerError::LabelOutOfRange { label, n_classes });
    }
    if let Some(pos) = x.data().iter().position(|v| !v.is_finite()) {
        return Err(LearnerError::NonFinite {
            row: pos / x.n_cols().max(1),
            column: pos % x.n_cols().max(1),
        });
    }
    Ok(())
}

pub(crate) fn check_schema(expected: &[String], x: &FeatureMatrix) -> Result<(), LearnerError> {
    if expected != x.names() {
        return Err(LearnerError::SchemaMismatch);
    }
    Ok(())
}

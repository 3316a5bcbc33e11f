use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{classification_metrics, random_folds, stratified_folds, FoldAssignment, MetricsReport, OofPredictions, ValidationError};
use crate::dataset::ObservationTable;
use crate::features::{bin_target, fit_features, FeatureConfig, FeatureMatrix, FittedFeatures};
use crate::learners::{LearnerSpec, Model, ProbabilityMatrix};
use crate::{Error, Result, N_CLASSES};

/// Cross-validation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOptions {
    pub k: usize,
    pub seed: u64,
    pub stratified: bool,
    /// Hand the held-out fold to the learner for early stopping. Off by
    /// default: the stopping round then depends on held-out rows.
    pub early_stopping: bool,
}

impl CvOptions {
    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.k < 2 {
            return Err(ValidationError::Parameter(format!("k must be >= 2, got {}", self.k)));
        }
        Ok(())
    }
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions {
            k: 5,
            seed: 0,
            stratified: true,
            early_stopping: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutput {
    pub oof: OofPredictions,
    pub metrics: MetricsReport,
    pub folds: FoldAssignment,
    /// Labelled rows of the input table, in OOF row order.
    pub rows: Vec<usize>,
}

/// Fitted transforms plus learner, ready to score new observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedPipeline {
    pub model_id: String,
    pub features: FittedFeatures,
    pub model: Model,
}

impl TrainedPipeline {
    pub fn predict_proba(&self, table: &ObservationTable) -> Result<ProbabilityMatrix> {
        let x = self.features.transform(table)?;
        Ok(self.model.predict_proba(&x)?)
    }
}

/// Indices of rows with a present target, and their classes.
pub fn labelled_rows(table: &ObservationTable) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (i, r) in table.records().iter().enumerate() {
        if let Ok(c) = bin_target(r.limiting_magnitude) {
            rows.push(i);
            labels.push(c.id());
        }
    }
    if rows.is_empty() {
        return Err(ValidationError::NoLabels.into());
    }
    Ok((rows, labels))
}

fn assign(labels: &[usize], options: &CvOptions) -> Result<FoldAssignment> {
    Ok(if options.stratified {
        stratified_folds(labels, options.k, options.seed)?
    } else {
        random_folds(labels.len(), options.k, options.seed)?
    })
}

fn fit_one(
    train: &ObservationTable,
    folds: &[usize],
    y: &[usize],
    config: &FeatureConfig,
    spec: &LearnerSpec,
    validation: Option<(&ObservationTable, &[usize])>,
) -> Result<(FittedFeatures, FeatureMatrix, Model)> {
    let (features, x) = fit_features(train, Some(folds), config)?;
    let valid_x = match validation {
        Some((t, _)) => Some(features.transform(t)?),
        None => None,
    };
    let valid = valid_x.as_ref().zip(validation.map(|(_, y)| y));
    let model = spec.fit(&x, y, N_CLASSES, valid)?;
    Ok((features, x, model))
}

/// Stratified K-fold with default options (`k`, `seed`).
pub fn run_cv(
    table: &ObservationTable,
    config: &FeatureConfig,
    spec: &LearnerSpec,
    k: usize,
    seed: u64,
) -> Result<CvOutput> {
    run_cv_with(table, config, spec, "model", &CvOptions { k, seed, ..CvOptions::default() })
}

/// For every fold, fits all transforms and the learner on the other folds
/// only and predicts the held-out rows. Unlabelled rows are ignored.
pub fn run_cv_with(
    table: &ObservationTable,
    config: &FeatureConfig,
    spec: &LearnerSpec,
    model_id: &str,
    options: &CvOptions,
) -> Result<CvOutput> {
    options.validate()?;
    let (_, labels) = labelled_rows(table)?;
    let folds = assign(&labels, options)?;
    run_cv_with_folds(table, config, spec, model_id, &folds, options.early_stopping)
}

/// [`run_cv_with`] on a given fold assignment over the labelled rows.
pub fn run_cv_with_folds(
    table: &ObservationTable,
    config: &FeatureConfig,
    spec: &LearnerSpec,
    model_id: &str,
    folds: &FoldAssignment,
    early_stopping: bool,
) -> Result<CvOutput> {
    config.validate()?;
    spec.validate()?;
    let (rows, labels) = labelled_rows(table)?;
    if folds.folds.len() != rows.len() {
        return Err(ValidationError::LengthMismatch {
            left: folds.folds.len(),
            right: rows.len(),
        }
        .into());
    }
    if let Some(&f) = folds.folds.iter().find(|&&f| f >= folds.k) {
        return Err(ValidationError::Parameter(format!("fold id {f} outside 0..{}", folds.k)).into());
    }
    let data = table.select(&rows);
    let k = folds.k;

    let per_fold: Vec<Result<(Vec<usize>, ProbabilityMatrix)>> = (0..k)
        .into_par_iter()
        .map(|f| {
            let held = folds.rows_in(f);
            if held.is_empty() {
                return Ok((held, ProbabilityMatrix::zeros(0, N_CLASSES)));
            }
            let train_rows = folds.rows_outside(f);
            let train = data.select(&train_rows);
            let train_folds: Vec<usize> = train_rows.iter().map(|&i| folds.folds[i]).collect();
            let y: Vec<usize> = train_rows.iter().map(|&i| labels[i]).collect();
            let test = data.select(&held);
            let test_y: Vec<usize> = held.iter().map(|&i| labels[i]).collect();
            let validation = early_stopping.then_some((&test, test_y.as_slice()));
            let result = fit_one(&train, &train_folds, &y, config, spec, validation).and_then(|(features, _, model)| {
                let x = features.transform(&test)?;
                Ok(model.predict_proba(&x)?)
            });
            result
                .map(|p| (held, p))
                .map_err(|e| Error::InFold { fold: f, source: Box::new(e) })
        })
        .collect();

    let n = rows.len();
    let mut probs = ProbabilityMatrix::zeros(n, N_CLASSES);
    let mut per_fold_f1 = Vec::with_capacity(k);
    for result in per_fold {
        let (held, p) = result?;
        if held.is_empty() {
            per_fold_f1.push(0.0);
            continue;
        }
        for (j, &i) in held.iter().enumerate() {
            probs.row_mut(i).copy_from_slice(p.row(j));
        }
        let truth: Vec<usize> = held.iter().map(|&i| labels[i]).collect();
        per_fold_f1.push(classification_metrics(&p.predicted_classes(), &truth, N_CLASSES)?.micro_f1);
    }
    let mut metrics = classification_metrics(&probs.predicted_classes(), &labels, N_CLASSES)?;
    metrics.per_fold_f1 = per_fold_f1;
    let oof = OofPredictions {
        model_id: model_id.to_string(),
        row_ids: data.records().iter().map(|r| r.id.clone()).collect(),
        folds: folds.folds.clone(),
        probs,
    };
    Ok(CvOutput {
        oof,
        metrics,
        folds: folds.clone(),
        rows,
    })
}

/// Fits on every labelled row. Fold labels from the same assignment as CV
/// keep the neighbour target feature out of fold on the training matrix.
pub fn fit_full(
    table: &ObservationTable,
    config: &FeatureConfig,
    spec: &LearnerSpec,
    model_id: &str,
    options: &CvOptions,
) -> Result<TrainedPipeline> {
    config.validate()?;
    spec.validate()?;
    options.validate()?;
    let (rows, labels) = labelled_rows(table)?;
    let data = table.select(&rows);
    let folds = assign(&labels, options)?;
    let (features, _, model) = fit_one(&data, &folds.folds, &labels, config, spec, None)?;
    Ok(TrainedPipeline {
        model_id: model_id.to_string(),
        features,
        model,
    })
}

/// Transforms fitted on every labelled row, with the training matrix the
/// learner in [`fit_full`] sees.
pub fn fit_training_features(
    table: &ObservationTable,
    config: &FeatureConfig,
    options: &CvOptions,
) -> Result<(FittedFeatures, FeatureMatrix)> {
    config.validate()?;
    let (rows, labels) = labelled_rows(table)?;
    let data = table.select(&rows);
    let folds = assign(&labels, options)?;
    Ok(fit_features(&data, Some(&folds.folds), config)?)
}

use serde::{Deserialize, Serialize};

use super::neighbors::{neighbor_means_for_points, NeighborMeans};
use super::{
    apply_feature_pipeline, build_neighbor_index, fit_feature_pipeline, neighbor_mean_features,
    FeatureConfig, FeatureError, FeatureMatrix, FeaturePipelineModel, KnnScaler, NeighborIndex,
    NeighborMode,
};
use crate::dataset::ObservationTable;
use crate::linalg::DenseMatrix;
use crate::textfeat::{fit_tfidf, fit_truncated_svd, tokenize, transform_svd, transform_tfidf, SvdModel, TfidfModel};

pub const TEXT_COLUMNS: [&str; 2] = ["comment_1", "comment_2"];

/// Fitted TF-IDF vocabulary and SVD for one comment column. `svd` is `None`
/// when the training corpus produced no vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextColumnModel {
    pub column: String,
    pub tfidf: TfidfModel,
    pub svd: Option<SvdModel>,
}

impl TextColumnModel {
    fn output_names(&self) -> Vec<String> {
        let r = self.svd.as_ref().map_or(0, SvdModel::rank);
        (0..r).map(|i| format!("{}_svd_{i}", self.column)).collect()
    }

    fn transform(&self, table: &ObservationTable) -> Result<Vec<Vec<f64>>, FeatureError> {
        let Some(svd) = &self.svd else {
            return Ok(Vec::new());
        };
        let docs = documents(table, &self.column);
        let x = transform_tfidf(&self.tfidf, &docs);
        let z = transform_svd(svd, &x).map_err(|e| FeatureError::Shape(e.to_string()))?;
        Ok(columns_of(&z))
    }
}

fn documents(table: &ObservationTable, column: &str) -> Vec<Vec<String>> {
    table
        .records()
        .iter()
        .map(|r| {
            let text = if column == "comment_1" { &r.comment_1 } else { &r.comment_2 };
            tokenize(text.as_deref())
        })
        .collect()
}

fn columns_of(m: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..m.cols()).map(|j| m.column(j)).collect()
}

/// Training rows kept for neighbour look-ups at prediction time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnReference {
    pub scaler: KnnScaler,
    pub k: usize,
    pub points: Vec<Option<[f64; 4]>>,
    pub target: Vec<Option<f64>>,
    pub sensor: Vec<Option<f64>>,
}

pub const KNN_NAMES: [&str; 4] = [
    "knn_target_mean",
    "knn_target_count",
    "knn_sensor_mean",
    "knn_sensor_count",
];

impl KnnReference {
    fn index(&self) -> Option<NeighborIndex> {
        let points = self.points.iter().map(|p| p.map(|p| p.to_vec())).collect();
        NeighborIndex::new(4, points, None).ok()
    }

    fn transform(&self, table: &ObservationTable) -> Result<Vec<Vec<f64>>, FeatureError> {
        let points: Vec<Option<Vec<f64>>> = table
            .records()
            .iter()
            .map(|r| self.scaler.point(r).map(|p| p.to_vec()))
            .collect();
        let (t, s) = match self.index() {
            Some(index) => (
                neighbor_means_for_points(&index, &self.target, &points, self.k)?,
                neighbor_means_for_points(&index, &self.sensor, &points, self.k)?,
            ),
            None => (
                flat_means(&self.target, points.len()),
                flat_means(&self.sensor, points.len()),
            ),
        };
        Ok(knn_columns(t, s))
    }
}

fn flat_means(values: &[Option<f64>], n: usize) -> NeighborMeans {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    let m = if present.is_empty() {
        0.0
    } else {
        present.iter().sum::<f64>() / present.len() as f64
    };
    NeighborMeans {
        mean: vec![m; n],
        count: vec![0; n],
    }
}

fn knn_columns(t: NeighborMeans, s: NeighborMeans) -> Vec<Vec<f64>> {
    vec![
        t.mean,
        t.count.into_iter().map(|c| c as f64).collect(),
        s.mean,
        s.count.into_iter().map(|c| c as f64).collect(),
    ]
}

/// Every fitted transform needed to turn an observation table into the
/// learner's input matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedFeatures {
    pub pipeline: FeaturePipelineModel,
    pub knn: Option<KnnReference>,
    pub text: Vec<TextColumnModel>,
    pub names: Vec<String>,
}

impl FittedFeatures {
    /// Features for rows not seen in training; all training rows are
    /// eligible neighbours.
    pub fn transform(&self, table: &ObservationTable) -> Result<FeatureMatrix, FeatureError> {
        let base = apply_feature_pipeline(&self.pipeline, table)?;
        let mut extra: Vec<Vec<f64>> = Vec::new();
        if let Some(knn) = &self.knn {
            extra.extend(knn.transform(table)?);
        }
        for t in &self.text {
            extra.extend(t.transform(table)?);
        }
        let names = self.names[base.n_cols()..].to_vec();
        let extra = FeatureMatrix::from_columns(names, base.row_ids().to_vec(), &extra)?;
        base.hstack(&extra)
    }
}

/// Fits every transform on `train` and returns the training matrix. The
/// neighbour mean of the target is computed out of fold using `folds` (one
/// label per training row), so no row's feature sees its own fold's targets.
pub fn fit_features(
    train: &ObservationTable,
    folds: Option<&[usize]>,
    config: &FeatureConfig,
) -> Result<(FittedFeatures, FeatureMatrix), FeatureError> {
    let pipeline = fit_feature_pipeline(train, config)?;
    let base = apply_feature_pipeline(&pipeline, train)?;
    let mut names = base.names().to_vec();
    let mut extra: Vec<Vec<f64>> = Vec::new();

    let knn = if config.knn {
        let folds = folds.ok_or_else(|| {
            FeatureError::Parameter("neighbour target features need fold labels".into())
        })?;
        if folds.len() != train.len() {
            return Err(FeatureError::Parameter(format!(
                "{} fold labels for {} rows",
                folds.len(),
                train.len()
            )));
        }
        let scaler = KnnScaler::from_pipeline(&pipeline, train);
        let target: Vec<Option<f64>> = train.records().iter().map(|r| r.limiting_magnitude).collect();
        let sensor: Vec<Option<f64>> = train.records().iter().map(|r| r.sensor_reading).collect();
        let (t, s) = match build_neighbor_index(train, &scaler, Some(folds)) {
            Ok(index) => (
                neighbor_mean_features(&index, &target, config.knn_k, NeighborMode::OutOfFold)?,
                neighbor_mean_features(&index, &sensor, config.knn_k, NeighborMode::All)?,
            ),
            Err(FeatureError::InsufficientData(_)) => (
                flat_means(&target, train.len()),
                flat_means(&sensor, train.len()),
            ),
            Err(e) => return Err(e),
        };
        extra.extend(knn_columns(t, s));
        names.extend(KNN_NAMES.iter().map(|s| s.to_string()));
        Some(KnnReference {
            points: train.records().iter().map(|r| scaler.point(r)).collect(),
            scaler,
            k: config.knn_k,
            target,
            sensor,
        })
    } else {
        None
    };

    let mut text = Vec::new();
    if config.text {
        for (i, column) in TEXT_COLUMNS.iter().enumerate() {
            let docs = documents(train, column);
            let tfidf = fit_tfidf(&docs, config.vocab_cap).map_err(|e| FeatureError::Parameter(e.to_string()))?;
            let x = transform_tfidf(&tfidf, &docs);
            let rank = config.svd_rank.min(x.rows()).min(x.cols());
            let svd = if rank == 0 {
                None
            } else {
                Some(
                    fit_truncated_svd(&x, rank, config.seed.wrapping_add(i as u64))
                        .map_err(|e| FeatureError::Parameter(e.to_string()))?,
                )
            };
            let model = TextColumnModel {
                column: column.to_string(),
                tfidf,
                svd,
            };
            names.extend(model.output_names());
            if let Some(svd) = &model.svd {
                let z = transform_svd(svd, &x).map_err(|e| FeatureError::Shape(e.to_string()))?;
                extra.extend(columns_of(&z));
            }
            text.push(model);
        }
    }

    let extra_names = names[base.n_cols()..].to_vec();
    let matrix = base.hstack(&FeatureMatrix::from_columns(
        extra_names,
        base.row_ids().to_vec(),
        &extra,
    )?)?;
    Ok((
        FittedFeatures {
            pipeline,
            knn,
            text,
            names,
        },
        matrix,
    ))
}

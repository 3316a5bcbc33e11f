use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{decompose_time, FeatureError, FeatureMatrix};
use crate::dataset::ObservationTable;

/// Numeric columns the pipeline knows how to extract.
pub const NUMERIC_COLUMNS: [&str; 11] = [
    "latitude",
    "longitude",
    "elevation_m",
    "time_zone",
    "sensor_reading",
    "population",
    "year",
    "month",
    "day_of_year",
    "seconds_of_day",
    "epoch_seconds",
];

/// Categorical columns the pipeline knows how to extract.
pub const CATEGORICAL_COLUMNS: [&str; 5] =
    ["type", "clouds", "constellation", "time_of_day_category", "country"];

const INDICATOR_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub quantile_low: f64,
    pub quantile_high: f64,
    pub numeric: Vec<String>,
    pub categorical: Vec<String>,
    /// Neighbour-mean features of the target and the sensor reading.
    pub knn: bool,
    pub knn_k: usize,
    /// TF-IDF + SVD features of both comment columns.
    pub text: bool,
    pub vocab_cap: usize,
    pub svd_rank: usize,
    pub seed: u64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            quantile_low: 0.01,
            quantile_high: 0.99,
            numeric: NUMERIC_COLUMNS.iter().map(|s| s.to_string()).collect(),
            categorical: CATEGORICAL_COLUMNS.iter().map(|s| s.to_string()).collect(),
            knn: true,
            knn_k: 10,
            text: true,
            vocab_cap: 20_000,
            svd_rank: 32,
            seed: 0,
        }
    }
}

impl FeatureConfig {
    /// Tabular columns only, no neighbour or text features.
    pub fn basic() -> Self {
        FeatureConfig {
            knn: false,
            text: false,
            ..FeatureConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        let (lo, hi) = (self.quantile_low, self.quantile_high);
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(FeatureError::Parameter(format!(
                "quantiles must satisfy 0 <= low <= high <= 1, got ({lo}, {hi})"
            )));
        }
        if self.knn_k < 1 {
            return Err(FeatureError::Parameter("knn_k must be >= 1".into()));
        }
        if self.vocab_cap < 1 || self.svd_rank < 1 {
            return Err(FeatureError::Parameter(
                "vocab_cap and svd_rank must be >= 1".into(),
            ));
        }
        for c in &self.numeric {
            if !NUMERIC_COLUMNS.contains(&c.as_str()) {
                return Err(FeatureError::Column(c.clone()));
            }
        }
        for c in &self.categorical {
            if !CATEGORICAL_COLUMNS.contains(&c.as_str()) {
                return Err(FeatureError::Column(c.clone()));
            }
        }
        Ok(())
    }
}

/// Extracts a numeric column, deriving the time parts from the timestamp.
pub fn raw_numeric(table: &ObservationTable, name: &str) -> Result<Vec<Option<f64>>, FeatureError> {
    let recs = table.records();
    let time = |f: fn(&super::TimeFeatures) -> f64| -> Vec<Option<f64>> {
        recs.iter()
            .map(|r| r.time.map(|t| f(&decompose_time(&t, r.time_zone))))
            .collect()
    };
    Ok(match name {
        "latitude" => recs.iter().map(|r| r.latitude).collect(),
        "longitude" => recs.iter().map(|r| r.longitude).collect(),
        "elevation_m" => recs.iter().map(|r| r.elevation_m).collect(),
        "time_zone" => recs.iter().map(|r| r.time_zone).collect(),
        "sensor_reading" => recs.iter().map(|r| r.sensor_reading).collect(),
        "limiting_magnitude" => recs.iter().map(|r| r.limiting_magnitude).collect(),
        "population" => table
            .population()
            .ok_or_else(|| FeatureError::Column("population".into()))?
            .iter()
            .map(|p| Some(p.value))
            .collect(),
        "year" => time(|t| f64::from(t.year)),
        "month" => time(|t| f64::from(t.month)),
        "day_of_year" => time(|t| f64::from(t.day_of_year)),
        "seconds_of_day" => time(|t| f64::from(t.seconds_of_day)),
        "epoch_seconds" => time(|t| t.epoch_seconds),
        other => return Err(FeatureError::Column(other.to_string())),
    })
}

pub fn raw_categorical(
    table: &ObservationTable,
    name: &str,
) -> Result<Vec<Option<String>>, FeatureError> {
    let recs = table.records();
    Ok(match name {
        "type" => recs.iter().map(|r| r.sensor_type.clone()).collect(),
        "clouds" => recs.iter().map(|r| r.clouds.clone()).collect(),
        "constellation" => recs.iter().map(|r| r.constellation.clone()).collect(),
        "country" => recs.iter().map(|r| r.country.clone()).collect(),
        "time_of_day_category" => recs
            .iter()
            .map(|r| {
                r.time
                    .map(|t| decompose_time(&t, r.time_zone).time_of_day.as_str().to_string())
            })
            .collect(),
        other => return Err(FeatureError::Column(other.to_string())),
    })
}

/// Linear-interpolation quantile of an ascending, nonempty slice.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericColumnModel {
    pub name: String,
    pub clip_low: f64,
    pub clip_high: f64,
    /// Mean and population standard deviation of the clipped present values.
    pub mean: f64,
    pub std: f64,
    /// Median of the clipped present values.
    pub impute: f64,
    pub constant: bool,
    pub missing_indicator: bool,
}

impl NumericColumnModel {
    pub fn transform(&self, x: Option<f64>) -> f64 {
        if self.constant {
            return 0.0;
        }
        let v = x.unwrap_or(self.impute).clamp(self.clip_low, self.clip_high);
        (v - self.mean) / self.std
    }
}

/// Index 0 is reserved for missing and unseen categories; known categories
/// map to `1..` in lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalColumnModel {
    pub name: String,
    pub categories: Vec<String>,
    pub missing_indicator: bool,
}

impl CategoricalColumnModel {
    pub fn index_of(&self, v: Option<&str>) -> usize {
        v.and_then(|v| self.categories.binary_search_by(|c| c.as_str().cmp(v)).ok())
            .map_or(0, |i| i + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturePipelineModel {
    pub config: FeatureConfig,
    pub numeric: Vec<NumericColumnModel>,
    pub categorical: Vec<CategoricalColumnModel>,
    /// Columns dropped because they had no present training values.
    pub excluded: Vec<String>,
    pub diagnostics: Vec<String>,
}

impl FeaturePipelineModel {
    pub fn numeric_column(&self, name: &str) -> Option<&NumericColumnModel> {
        self.numeric.iter().find(|c| c.name == name)
    }

    pub fn output_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.numeric.iter().map(|c| c.name.clone()).collect();
        names.extend(self.categorical.iter().map(|c| c.name.clone()));
        names.extend(
            self.numeric
                .iter()
                .filter(|c| c.missing_indicator)
                .map(|c| format!("{}_missing", c.name)),
        );
        names.extend(
            self.categorical
                .iter()
                .filter(|c| c.missing_indicator)
                .map(|c| format!("{}_missing", c.name)),
        );
        names
    }
}

/// Learns clip bounds, standardisation, imputation and category maps from a
/// training table. Mean and standard deviation are taken after clipping.
pub fn fit_feature_pipeline(
    train: &ObservationTable,
    config: &FeatureConfig,
) -> Result<FeaturePipelineModel, FeatureError> {
    config.validate()?;
    if train.is_empty() {
        return Err(FeatureError::EmptyTable);
    }
    let n = train.len() as f64;
    let mut numeric = Vec::new();
    let mut categorical = Vec::new();
    let mut excluded = Vec::new();
    let mut diagnostics = Vec::new();

    for name in &config.numeric {
        let col = raw_numeric(train, name)?;
        let mut present: Vec<f64> = col.iter().flatten().copied().collect();
        if present.is_empty() {
            diagnostics.push(format!("column `{name}` has no present values; excluded"));
            excluded.push(name.clone());
            continue;
        }
        present.sort_by(f64::total_cmp);
        let clip_low = quantile_sorted(&present, config.quantile_low);
        let clip_high = quantile_sorted(&present, config.quantile_high);
        let clipped: Vec<f64> = present.iter().map(|v| v.clamp(clip_low, clip_high)).collect();
        let mean = clipped.iter().sum::<f64>() / clipped.len() as f64;
        let var = clipped.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / clipped.len() as f64;
        let std = var.sqrt();
        let missing = col.len() - present.len();
        if std == 0.0 {
            diagnostics.push(format!("column `{name}` is constant after clipping"));
        }
        numeric.push(NumericColumnModel {
            name: name.clone(),
            clip_low,
            clip_high,
            mean,
            std,
            impute: quantile_sorted(&clipped, 0.5),
            constant: std == 0.0,
            missing_indicator: missing as f64 / n > INDICATOR_THRESHOLD,
        });
    }

    for name in &config.categorical {
        let col = raw_categorical(train, name)?;
        let cats: BTreeSet<&str> = col.iter().flatten().map(String::as_str).collect();
        if cats.is_empty() {
            diagnostics.push(format!("column `{name}` has no present values; excluded"));
            excluded.push(name.clone());
            continue;
        }
        let missing = col.iter().filter(|v| v.is_none()).count();
        categorical.push(CategoricalColumnModel {
            name: name.clone(),
            categories: cats.into_iter().map(str::to_string).collect(),
            missing_indicator: missing as f64 / n > INDICATOR_THRESHOLD,
        });
    }

    Ok(FeaturePipelineModel {
        config: config.clone(),
        numeric,
        categorical,
        excluded,
        diagnostics,
    })
}

/// Impute, clamp and z-score numeric cells; map categorical cells to their
/// index; append missing indicators where the training data warranted them.
pub fn apply_feature_pipeline(
    model: &FeaturePipelineModel,
    table: &ObservationTable,
) -> Result<FeatureMatrix, FeatureError> {
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut indicators: Vec<Vec<f64>> = Vec::new();
    let mut cat_indicators: Vec<Vec<f64>> = Vec::new();
    for c in &model.numeric {
        let raw = raw_numeric(table, &c.name)?;
        columns.push(raw.iter().map(|&x| c.transform(x)).collect());
        if c.missing_indicator {
            indicators.push(raw.iter().map(|x| f64::from(u8::from(x.is_none()))).collect());
        }
    }
    for c in &model.categorical {
        let raw = raw_categorical(table, &c.name)?;
        columns.push(raw.iter().map(|v| c.index_of(v.as_deref()) as f64).collect());
        if c.missing_indicator {
            cat_indicators.push(raw.iter().map(|x| f64::from(u8::from(x.is_none()))).collect());
        }
    }
    columns.extend(indicators);
    columns.extend(cat_indicators);
    let row_ids = table.records().iter().map(|r| r.id.clone()).collect();
    FeatureMatrix::from_columns(model.output_names(), row_ids, &columns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ObservationRecord;

    fn table(values: &[Option<f64>]) -> ObservationTable {
        ObservationTable::new(
            values
                .iter()
                .enumerate()
                .map(|(i, &v)| ObservationRecord {
                    id: format!("r{i}"),
                    elevation_m: v,
                    ..Default::default()
                })
                .collect(),
        )
        .unwrap()
    }

    fn config(lo: f64, hi: f64) -> FeatureConfig {
        FeatureConfig {
            quantile_low: lo,
            quantile_high: hi,
            numeric: vec!["elevation_m".into()],
            categorical: vec![],
            ..FeatureConfig::basic()
        }
    }

    #[test]
    fn interpolated_clip_bounds() {
        let vals: Vec<Option<f64>> = (1..=10).map(|v| Some(v as f64)).collect();
        let m = fit_feature_pipeline(&table(&vals), &config(0.1, 0.9)).unwrap();
        let c = &m.numeric[0];
        assert!((c.clip_low - 1.9).abs() < 1e-12);
        assert!((c.clip_high - 9.1).abs() < 1e-12);
    }

    #[test]
    fn two_point_population_std() {
        let m = fit_feature_pipeline(&table(&[Some(0.0), Some(10.0)]), &config(0.0, 1.0)).unwrap();
        let c = &m.numeric[0];
        assert_eq!((c.clip_low, c.clip_high, c.mean, c.std), (0.0, 10.0, 5.0, 5.0));
    }

    #[test]
    fn all_missing_column_is_excluded() {
        let m = fit_feature_pipeline(&table(&[None, None]), &config(0.0, 1.0)).unwrap();
        assert!(m.numeric.is_empty());
        assert_eq!(m.excluded, ["elevation_m"]);
        assert_eq!(m.diagnostics.len(), 1);
    }

    fn manual_model() -> NumericColumnModel {
        NumericColumnModel {
            name: "elevation_m".into(),
            clip_low: 1.0,
            clip_high: 7.0,
            mean: 4.0,
            std: 2.0,
            impute: 4.0,
            constant: false,
            missing_indicator: true,
        }
    }

    #[test]
    fn clamp_then_zscore() {
        assert_eq!(manual_model().transform(Some(9.2)), 1.5);
    }

    #[test]
    fn missing_cell_imputes_and_flags() {
        let model = FeaturePipelineModel {
            config: config(0.0, 1.0),
            numeric: vec![manual_model()],
            categorical: vec![],
            excluded: vec![],
            diagnostics: vec![],
        };
        let x = apply_feature_pipeline(&model, &table(&[None])).unwrap();
        assert_eq!(x.names(), ["elevation_m", "elevation_m_missing"]);
        assert_eq!(x.row(0), [0.0, 1.0]);
    }

    #[test]
    fn unseen_category_maps_to_zero() {
        let c = CategoricalColumnModel {
            name: "type".into(),
            categories: vec!["GAN".into(), "SQM".into()],
            missing_indicator: false,
        };
        assert_eq!(c.index_of(Some("XYZ")), 0);
        assert_eq!(c.index_of(None), 0);
        assert_eq!(c.index_of(Some("GAN")), 1);
        assert_eq!(c.index_of(Some("SQM")), 2);
    }

    #[test]
    fn population_requires_join() {
        let cfg = FeatureConfig {
            numeric: vec!["population".into()],
            categorical: vec![],
            ..FeatureConfig::basic()
        };
        assert_eq!(
            fit_feature_pipeline(&table(&[Some(1.0)]), &cfg),
            Err(FeatureError::Column("population".into()))
        );
    }

    #[test]
    fn bad_quantiles_rejected() {
        assert!(config(0.9, 0.1).validate().is_err());
        assert!(config(-0.1, 0.5).validate().is_err());
    }
}

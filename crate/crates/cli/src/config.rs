//! Flat `key = value` run configuration.
//!
//! A `[section]` line prefixes the keys below it with `section.`, so
//! `[cv]` followed by `k = 10` is the same as `cv.k = 10`. Lines starting
//! with `#` are comments. Relative paths resolve against the directory of
//! the config file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use skyglow::dataset::NumericField;
use skyglow::ensemble::{validate_steps, DEFAULT_STEPS};
use skyglow::features::{FeatureConfig, CATEGORICAL_COLUMNS, NUMERIC_COLUMNS};
use skyglow::learners::{ForestParams, GbdtParams, LearnerSpec};
use skyglow::validation::CvOptions;

use crate::error::CliError;

pub const DEFAULT_MODELS: [&str; 3] = ["gbdt_full", "gbdt_basic", "forest"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FeatureSet {
    /// Tabular, neighbour and text features.
    Full,
    /// Tabular features only.
    Basic,
}

impl FeatureSet {
    pub fn name(self) -> &'static str {
        match self {
            FeatureSet::Full => "full",
            FeatureSet::Basic => "basic",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub id: String,
    pub features: FeatureSet,
    pub spec: LearnerSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub observations: PathBuf,
    pub population: Option<PathBuf>,
    pub predict_input: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub strict: bool,
    pub quantile_low: f64,
    pub quantile_high: f64,
    pub knn_k: usize,
    pub svd_rank: usize,
    pub vocab_cap: usize,
    pub models: Vec<ModelConfig>,
    pub cv_k: usize,
    pub cv_stratified: bool,
    pub cv_early_stopping: bool,
    pub ensemble_steps: Vec<f64>,
    pub report_charts: bool,
    pub trend_fields: Vec<NumericField>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

struct Entries {
    values: BTreeMap<String, (String, usize)>,
}

impl Entries {
    fn parse(text: &str) -> Result<Entries, CliError> {
        let mut values = BTreeMap::new();
        let mut section = String::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let line_no = n + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| CliError::Syntax {
                    line: line_no,
                    message: format!("unterminated section header `{line}`"),
                })?;
                section = name.trim().to_string();
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| CliError::Syntax {
                line: line_no,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = if section.is_empty() {
                k.trim().to_string()
            } else {
                format!("{section}.{}", k.trim())
            };
            if values.insert(key.clone(), (v.trim().to_string(), line_no)).is_some() {
                return Err(CliError::Syntax {
                    line: line_no,
                    message: format!("duplicate key `{key}`"),
                });
            }
        }
        Ok(Entries { values })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.values.remove(key).map(|(v, _)| v)
    }

    fn get<T: FromStr>(&mut self, key: &str, default: T) -> Result<T, CliError> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| CliError::Config(format!("`{key}`: cannot parse `{v}`"))),
        }
    }

    fn list(&mut self, key: &str) -> Option<Vec<String>> {
        self.take(key).map(|v| {
            v.split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect()
        })
    }

    fn finish(self) -> Result<(), CliError> {
        match self.values.into_iter().min_by_key(|(_, (_, line))| *line) {
            Some((key, _)) => Err(CliError::UnknownKey(key)),
            None => Ok(()),
        }
    }
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = PathBuf::from(p);
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

fn existing(base: &Path, key: &str, p: &str) -> Result<PathBuf, CliError> {
    let path = resolve(base, p);
    if !path.is_file() {
        return Err(CliError::Config(format!("`{key}`: {} does not exist", path.display())));
    }
    Ok(path)
}

fn model_config(id: &str, e: &mut Entries, seed: u64) -> Result<ModelConfig, CliError> {
    let (default_learner, default_features) = match id {
        "gbdt_full" => (Some("gbdt"), "full"),
        "gbdt_basic" => (Some("gbdt"), "basic"),
        "forest" => (Some("forest"), "basic"),
        _ => (None, "basic"),
    };
    let key = |k: &str| format!("model.{id}.{k}");
    let learner = e
        .take(&key("learner"))
        .or(default_learner.map(str::to_string))
        .ok_or_else(|| CliError::Config(format!("`{}` is required for model `{id}`", key("learner"))))?;
    let features = match e.take(&key("features")).as_deref().unwrap_or(default_features) {
        "full" => FeatureSet::Full,
        "basic" => FeatureSet::Basic,
        other => {
            return Err(CliError::Config(format!(
                "`{}`: expected full or basic, got `{other}`",
                key("features")
            )))
        }
    };
    let spec = match learner.as_str() {
        "gbdt" => {
            let d = GbdtParams::default();
            LearnerSpec::Gbdt(GbdtParams {
                rounds: e.get(&key("rounds"), d.rounds)?,
                learning_rate: e.get(&key("learning_rate"), d.learning_rate)?,
                max_leaves: e.get(&key("max_leaves"), d.max_leaves)?,
                min_samples_leaf: e.get(&key("min_samples_leaf"), d.min_samples_leaf)?,
                max_bins: e.get(&key("max_bins"), d.max_bins)?,
                l2: e.get(&key("l2"), d.l2)?,
                early_stopping_patience: e.get(&key("patience"), d.early_stopping_patience)?,
                seed,
            })
        }
        "forest" => {
            let d = ForestParams::default();
            let max_features = match e.take(&key("max_features")).as_deref() {
                None | Some("sqrt") => None,
                Some(v) => Some(v.parse().map_err(|_| {
                    CliError::Config(format!("`{}`: cannot parse `{v}`", key("max_features")))
                })?),
            };
            LearnerSpec::Forest(ForestParams {
                trees: e.get(&key("trees"), d.trees)?,
                min_samples_leaf: e.get(&key("min_samples_leaf"), d.min_samples_leaf)?,
                max_features,
                bootstrap: e.get(&key("bootstrap"), d.bootstrap)?,
                seed,
            })
        }
        other => {
            return Err(CliError::Config(format!(
                "`{}`: expected gbdt or forest, got `{other}`",
                key("learner")
            )))
        }
    };
    spec.validate().map_err(CliError::core)?;
    Ok(ModelConfig {
        id: id.to_string(),
        features,
        spec,
    })
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        RunConfig::parse(&text, base, overrides)
    }

    pub fn parse(text: &str, base: &Path, overrides: &Overrides) -> Result<RunConfig, CliError> {
        let mut e = Entries::parse(text)?;
        let observations = e
            .take("paths.observations")
            .ok_or_else(|| CliError::Config("`paths.observations` is required".into()))?;
        let observations = existing(base, "paths.observations", &observations)?;
        let population = match e.take("paths.population") {
            Some(p) => Some(existing(base, "paths.population", &p)?),
            None => None,
        };
        let predict_input = match e.take("paths.predict") {
            Some(p) => Some(existing(base, "paths.predict", &p)?),
            None => None,
        };
        let out_dir = resolve(base, &e.take("output.dir").unwrap_or_else(|| "out".into()));
        let out_dir = overrides.out_dir.clone().unwrap_or(out_dir);
        let seed = e.get("seed", 0u64)?;
        let seed = overrides.seed.unwrap_or(seed);
        let strict = e.get("ingest.strict", true)?;

        let f = FeatureConfig::default();
        let quantile_low = e.get("features.quantile_low", f.quantile_low)?;
        let quantile_high = e.get("features.quantile_high", f.quantile_high)?;
        let knn_k = e.get("features.knn_k", f.knn_k)?;
        let svd_rank = e.get("features.svd_rank", f.svd_rank)?;
        let vocab_cap = e.get("features.vocab_cap", f.vocab_cap)?;

        let ids = e
            .list("models")
            .unwrap_or_else(|| DEFAULT_MODELS.iter().map(|s| s.to_string()).collect());
        if ids.is_empty() {
            return Err(CliError::Config("`models` lists no model".into()));
        }
        let mut models: Vec<ModelConfig> = Vec::with_capacity(ids.len());
        for id in &ids {
            if !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(CliError::Config(format!("model id `{id}` must be [A-Za-z0-9_-]+")));
            }
            if models.iter().any(|m| &m.id == id) {
                return Err(CliError::Config(format!("model id `{id}` listed twice")));
            }
            models.push(model_config(id, &mut e, seed)?);
        }

        let d = CvOptions::default();
        let cv_k = e.get("cv.k", d.k)?;
        let cv_stratified = e.get("cv.stratified", d.stratified)?;
        let cv_early_stopping = e.get("cv.early_stopping", d.early_stopping)?;
        let ensemble_steps = match e.list("ensemble.steps") {
            None => DEFAULT_STEPS.to_vec(),
            Some(v) => v
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| CliError::Config(format!("`ensemble.steps`: cannot parse `{s}`")))
                })
                .collect::<Result<_, _>>()?,
        };
        let report_charts = e.get("report.charts", true)?;
        let trend_fields = match e.list("report.trend_fields") {
            None => vec![
                NumericField::LimitingMagnitude,
                NumericField::SensorReading,
                NumericField::ElevationM,
            ],
            Some(v) => v
                .iter()
                .map(|s| s.parse::<NumericField>().map_err(CliError::core))
                .collect::<Result<_, _>>()?,
        };
        e.finish()?;

        let config = RunConfig {
            observations,
            population,
            predict_input,
            out_dir,
            seed,
            strict,
            quantile_low,
            quantile_high,
            knn_k,
            svd_rank,
            vocab_cap,
            models,
            cv_k,
            cv_stratified,
            cv_early_stopping,
            ensemble_steps,
            report_charts,
            trend_fields,
        };
        config.feature_config(FeatureSet::Full).validate().map_err(CliError::core)?;
        config.cv_options().validate().map_err(CliError::core)?;
        validate_steps(&config.ensemble_steps).map_err(CliError::core)?;
        if config.trend_fields.contains(&NumericField::Population) && config.population.is_none() {
            return Err(CliError::Config(
                "`report.trend_fields` lists population but `paths.population` is not set".into(),
            ));
        }
        Ok(config)
    }

    /// Feature settings for one feature set; population is dropped when no
    /// census table is configured.
    pub fn feature_config(&self, set: FeatureSet) -> FeatureConfig {
        let full = set == FeatureSet::Full;
        FeatureConfig {
            quantile_low: self.quantile_low,
            quantile_high: self.quantile_high,
            numeric: NUMERIC_COLUMNS
                .iter()
                .filter(|c| self.population.is_some() || **c != "population")
                .map(|s| s.to_string())
                .collect(),
            categorical: CATEGORICAL_COLUMNS.iter().map(|s| s.to_string()).collect(),
            knn: full,
            knn_k: self.knn_k,
            text: full,
            vocab_cap: self.vocab_cap,
            svd_rank: self.svd_rank,
            seed: self.seed,
        }
    }

    pub fn cv_options(&self) -> CvOptions {
        CvOptions {
            k: self.cv_k,
            seed: self.seed,
            stratified: self.cv_stratified,
            early_stopping: self.cv_early_stopping,
        }
    }

    /// Feature sets used by at least one model, in a fixed order.
    pub fn feature_sets(&self) -> Vec<FeatureSet> {
        let mut sets: Vec<FeatureSet> = self.models.iter().map(|m| m.features).collect();
        sets.sort();
        sets.dedup();
        sets
    }

    /// Every effective value in the config syntax; loading it back yields
    /// the same configuration.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let list = |v: &[String]| v.join(", ");
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "models = {}", list(&self.models.iter().map(|m| m.id.clone()).collect::<Vec<_>>()));
        let _ = writeln!(s, "\n[paths]\nobservations = {}", self.observations.display());
        if let Some(p) = &self.population {
            let _ = writeln!(s, "population = {}", p.display());
        }
        if let Some(p) = &self.predict_input {
            let _ = writeln!(s, "predict = {}", p.display());
        }
        let _ = writeln!(s, "\n[output]\ndir = {}", self.out_dir.display());
        let _ = writeln!(s, "\n[ingest]\nstrict = {}", self.strict);
        let _ = writeln!(
            s,
            "\n[features]\nquantile_low = {}\nquantile_high = {}\nknn_k = {}\nsvd_rank = {}\nvocab_cap = {}",
            self.quantile_low, self.quantile_high, self.knn_k, self.svd_rank, self.vocab_cap
        );
        for m in &self.models {
            let _ = writeln!(s, "\n[model.{}]\nfeatures = {}", m.id, m.features.name());
            match &m.spec {
                LearnerSpec::Gbdt(p) => {
                    let _ = writeln!(
                        s,
                        "learner = gbdt\nrounds = {}\nlearning_rate = {}\nmax_leaves = {}\nmin_samples_leaf = {}\nmax_bins = {}\nl2 = {}\npatience = {}",
                        p.rounds, p.learning_rate, p.max_leaves, p.min_samples_leaf, p.max_bins, p.l2, p.early_stopping_patience
                    );
                }
                LearnerSpec::Forest(p) => {
                    let mf = p.max_features.map_or("sqrt".to_string(), |v| v.to_string());
                    let _ = writeln!(
                        s,
                        "learner = forest\ntrees = {}\nmin_samples_leaf = {}\nmax_features = {mf}\nbootstrap = {}",
                        p.trees, p.min_samples_leaf, p.bootstrap
                    );
                }
            }
        }
        let _ = writeln!(
            s,
            "\n[cv]\nk = {}\nstratified = {}\nearly_stopping = {}",
            self.cv_k, self.cv_stratified, self.cv_early_stopping
        );
        let steps: Vec<String> = self.ensemble_steps.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "\n[ensemble]\nsteps = {}", list(&steps));
        let fields: Vec<String> = self.trend_fields.iter().map(|f| f.name().to_string()).collect();
        let _ = writeln!(
            s,
            "\n[report]\ncharts = {}\ntrend_fields = {}",
            self.report_charts,
            list(&fields)
        );
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dir_with_data() -> tempfile::TempDir {
        let d = tempfile::tempdir().unwrap();
        std::fs::write(d.path().join("obs.csv"), "id\n").unwrap();
        std::fs::write(d.path().join("pop.csv"), "Country Name\n").unwrap();
        d
    }

    fn parse(d: &tempfile::TempDir, text: &str) -> Result<RunConfig, CliError> {
        RunConfig::parse(text, d.path(), &Overrides::default())
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let d = dir_with_data();
        let c = parse(&d, "[paths]\nobservations = obs.csv\n").unwrap();
        assert_eq!(c.cv_k, 5);
        assert!(c.cv_stratified && !c.cv_early_stopping);
        assert_eq!(c.ensemble_steps, DEFAULT_STEPS);
        assert_eq!(c.models.iter().map(|m| m.id.as_str()).collect::<Vec<_>>(), DEFAULT_MODELS);
        assert_eq!(c.models[0].spec, LearnerSpec::Gbdt(GbdtParams::default()));
        assert_eq!(c.out_dir, d.path().join("out"));
        assert!(!c.feature_config(FeatureSet::Full).numeric.contains(&"population".to_string()));
    }

    #[test]
    fn cv_k_one_is_forwarded_parameter_error() {
        let d = dir_with_data();
        let err = parse(&d, "paths.observations = obs.csv\ncv.k = 1\n").unwrap_err();
        assert!(matches!(
            err,
            CliError::Core(skyglow::Error::Validation(skyglow::validation::ValidationError::Parameter(_)))
        ));
    }

    #[test]
    fn unknown_key_is_named() {
        let d = dir_with_data();
        let err = parse(&d, "paths.observations = obs.csv\n[cv]\nkk = 3\n").unwrap_err();
        assert!(matches!(&err, CliError::UnknownKey(k) if k == "cv.kk"));
        assert!(err.to_string().contains("cv.kk"));
    }

    #[test]
    fn keys_of_unlisted_models_are_unknown() {
        let d = dir_with_data();
        let err = parse(&d, "paths.observations = obs.csv\nmodels = forest\nmodel.gbdt_full.rounds = 3\n").unwrap_err();
        assert!(matches!(&err, CliError::UnknownKey(k) if k == "model.gbdt_full.rounds"));
    }

    #[test]
    fn missing_input_file() {
        let d = dir_with_data();
        assert!(parse(&d, "paths.observations = nope.csv\n").is_err());
    }

    #[test]
    fn echo_round_trips() {
        let d = dir_with_data();
        let c = parse(
            &d,
            "seed = 4\nmodels = forest, mine\n[paths]\nobservations = obs.csv\npopulation = pop.csv\n\
             [model.mine]\nlearner = gbdt\nfeatures = full\nrounds = 7\n[model.forest]\nmax_features = 3\n\
             [ensemble]\nsteps = 0.5, 0.01\n",
        )
        .unwrap();
        let again = parse(&d, &c.echo()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn overrides_win() {
        let d = dir_with_data();
        let o = Overrides {
            out_dir: Some(PathBuf::from("/tmp/x")),
            seed: Some(9),
        };
        let c = RunConfig::parse("paths.observations = obs.csv\nseed = 1\n", d.path(), &o).unwrap();
        assert_eq!((c.seed, c.out_dir), (9, PathBuf::from("/tmp/x")));
    }
}

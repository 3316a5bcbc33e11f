//! One function per pipeline stage. Every stage reads its inputs from the
//! output directory, checks that they exist, and overwrites its own
//! artifacts.

use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use skyglow::dataset::{
    category_distribution, join_population, missingness_report, parse_observations, parse_population,
    write_frequency_table, write_missingness_report, write_observations, write_population, CategoricalField,
    ObservationTable, PopulationTable, Strictness,
};
use skyglow::ensemble::{blend, blended_f1, mean_blend, optimize_weights, read_weights_csv, write_weights_csv};
use skyglow::features::{raw_numeric, FeatureMatrix, NUMERIC_COLUMNS};
use skyglow::learners::ProbabilityMatrix;
use skyglow::svg::{bar_chart, line_chart, LineSeries};
use skyglow::validation::{
    annual_trend, fit_full, fit_training_features, labelled_rows, pearson, read_oof_csv, run_cv_with,
    write_oof_csv, write_trend_csv, OofPredictions, TrainedPipeline,
};
use skyglow::N_CLASSES;

use crate::config::{FeatureSet, RunConfig};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Ingest,
    Eda,
    Features,
    Cv,
    Train,
    Ensemble,
    Predict,
    Report,
}

impl Command {
    pub const PIPELINE: [Command; 8] = [
        Command::Ingest,
        Command::Eda,
        Command::Features,
        Command::Cv,
        Command::Train,
        Command::Ensemble,
        Command::Predict,
        Command::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Eda => "eda",
            Command::Features => "features",
            Command::Cv => "cv",
            Command::Train => "train",
            Command::Ensemble => "ensemble",
            Command::Predict => "predict",
            Command::Report => "report",
        }
    }
}

/// Artifact locations under the output directory.
pub struct Layout {
    root: PathBuf,
}

impl Layout {
    pub fn new(root: &Path) -> Layout {
        Layout {
            root: root.to_path_buf(),
        }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn observations(&self) -> PathBuf {
        self.path("ingest/observations.csv")
    }

    pub fn population(&self) -> PathBuf {
        self.path("ingest/population.csv")
    }

    pub fn feature_matrix(&self, set: FeatureSet) -> PathBuf {
        self.path(&format!("features/{}_matrix.csv", set.name()))
    }

    pub fn feature_pipeline(&self, set: FeatureSet) -> PathBuf {
        self.path(&format!("features/{}_pipeline.json", set.name()))
    }

    pub fn oof(&self, model: &str) -> PathBuf {
        self.path(&format!("cv/oof_{model}.csv"))
    }

    pub fn model(&self, model: &str) -> PathBuf {
        self.path(&format!("models/{model}.json"))
    }

    pub fn weights(&self) -> PathBuf {
        self.path("ensemble/weights.csv")
    }
}

/// Exclusive claim on an output directory, released on drop.
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(dir: &Path) -> Result<DirLock, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let path = dir.join(".skyglow.lock");
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(DirLock { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(CliError::Locked(path)),
            Err(e) => Err(CliError::io(path, e)),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

fn require(path: PathBuf, command: &'static str) -> Result<PathBuf, CliError> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(CliError::MissingArtifact { path, command })
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes()).map_err(|e| CliError::io(path, e))?;
    w.flush().map_err(|e| CliError::io(path, e))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string(value).map_err(|e| CliError::Artifact {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    write_text(path, &text)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_reader(open(path)?).map_err(|e| CliError::Artifact {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

struct CsvOut {
    path: PathBuf,
    w: csv::Writer<BufWriter<File>>,
}

impl CsvOut {
    fn create(path: &Path) -> Result<CsvOut, CliError> {
        Ok(CsvOut {
            path: path.to_path_buf(),
            w: csv::Writer::from_writer(create(path)?),
        })
    }

    fn row<I, S>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.w.write_record(fields).map_err(|e| CliError::Artifact {
            path: self.path.clone(),
            message: e.to_string(),
        })
    }

    fn finish(mut self) -> Result<(), CliError> {
        self.w.flush().map_err(|e| CliError::io(&self.path, e))
    }
}

fn read_csv_rows(path: &Path) -> Result<Vec<csv::StringRecord>, CliError> {
    let bad = |e: csv::Error| CliError::Artifact {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut r = csv::Reader::from_reader(open(path)?);
    r.records().collect::<Result<_, _>>().map_err(bad)
}

fn parse_f64(path: &Path, v: &str) -> Result<f64, CliError> {
    v.parse().map_err(|_| CliError::Artifact {
        path: path.to_path_buf(),
        message: format!("not a number: `{v}`"),
    })
}

/// Validated observations from the ingest stage, joined with the census
/// table when one was ingested.
fn load_table(layout: &Layout) -> Result<ObservationTable, CliError> {
    let path = require(layout.observations(), "ingest")?;
    let parsed = parse_observations(open(&path)?, Strictness::Strict).map_err(CliError::core)?;
    let pop_path = layout.population();
    Ok(if pop_path.is_file() {
        let pop = parse_population(open(&pop_path)?).map_err(CliError::core)?;
        join_population(&parsed.table, &pop)
    } else {
        parsed.table
    })
}

pub fn ingest(config: &RunConfig, layout: &Layout) -> Result<(), CliError> {
    let strictness = if config.strict {
        Strictness::Strict
    } else {
        Strictness::Lenient
    };
    let parsed = parse_observations(open(&config.observations)?, strictness).map_err(CliError::core)?;
    let mut w = create(&layout.observations())?;
    write_observations(&parsed.table, &mut w).map_err(CliError::core)?;
    w.flush().map_err(|e| CliError::io(layout.observations(), e))?;
    let diagnostics: String = parsed.diagnostics.iter().map(|d| format!("{d}\n")).collect();
    write_text(&layout.path("ingest/diagnostics.txt"), &diagnostics)?;
    for d in &parsed.diagnostics {
        eprintln!("ingest: {d}");
    }
    let pop_out = layout.population();
    match &config.population {
        Some(p) => {
            let pop: PopulationTable = parse_population(open(p)?).map_err(CliError::core)?;
            let mut w = create(&pop_out)?;
            write_population(&pop, &mut w).map_err(CliError::core)?;
            w.flush().map_err(|e| CliError::io(&pop_out, e))?;
        }
        None if pop_out.exists() => fs::remove_file(&pop_out).map_err(|e| CliError::io(&pop_out, e))?,
        None => {}
    }
    eprintln!(
        "ingest: {} rows kept, {} diagnostics",
        parsed.table.len(),
        parsed.diagnostics.len()
    );
    Ok(())
}

pub fn eda(config: &RunConfig, layout: &Layout) -> Result<(), CliError> {
    let table = load_table(layout)?;
    let report = missingness_report(&table).map_err(CliError::core)?;
    let path = layout.path("eda/missingness.csv");
    let mut w = create(&path)?;
    write_missingness_report(&report, &mut w).map_err(CliError::core)?;
    w.flush().map_err(|e| CliError::io(&path, e))?;

    for field in CategoricalField::ALL {
        let freq = category_distribution(&table, field.name()).map_err(CliError::core)?;
        let path = layout.path(&format!("eda/category_{}.csv", field.name()));
        let mut w = create(&path)?;
        write_frequency_table(&freq, &mut w).map_err(CliError::core)?;
        w.flush().map_err(|e| CliError::io(&path, e))?;
    }

    let target: Vec<Option<f64>> = table.records().iter().map(|r| r.limiting_magnitude).collect();
    let mut out = CsvOut::create(&layout.path("eda/correlation.csv"))?;
    out.row(["feature", "pearson", "complete_pairs"])?;
    for name in NUMERIC_COLUMNS {
        if name == "population" && table.population().is_none() {
            continue;
        }
        let x = raw_numeric(&table, name).map_err(CliError::core)?;
        let pairs = x.iter().zip(&target).filter(|(a, b)| a.is_some() && b.is_some()).count();
        let r = pearson(&x, &target).map_or_else(|_| "undefined".to_string(), |r| r.to_string());
        out.row([name.to_string(), r, pairs.to_string()])?;
    }
    out.finish()?;

    let trends: Vec<(String, _)> = config
        .trend_fields
        .iter()
        .map(|&f| (f.name().to_string(), annual_trend(&table, f)))
        .collect();
    let path = layout.path("eda/annual_trend.csv");
    let mut w = create(&path)?;
    write_trend_csv(&trends, &mut w).map_err(CliError::core)?;
    w.flush().map_err(|e| CliError::io(&path, e))?;
    eprintln!("eda: {} rows summarised", table.len());
    Ok(())
}

pub fn features(config: &RunConfig, layout: &Layout) -> Result<(), CliError> {
    let table = load_table(layout)?;
    for set in config.feature_sets() {
        let (fitted, matrix) = fit_training_features(&table, &config.feature_config(set), &config.cv_options())?;
        let path = layout.feature_matrix(set);
        let mut w = create(&path)?;
        matrix.write_csv(&mut w).map_err(CliError::core)?;
        w.flush().map_err(|e| CliError::io(&path, e))?;
        write_json(&layout.feature_pipeline(set), &fitted)?;
        eprintln!(
            "features: {} set, {} rows x {} columns",
            set.name(),
            matrix.n_rows(),
            matrix.n_cols()
        );
    }
    Ok(())
}

pub fn cv(config: &RunConfig, layout: &Layout) -> Result<(), CliError> {
    for set in config.feature_sets() {
        require(layout.feature_matrix(set), "features")?;
    }
    let table = load_table(layout)?;
    let mut metrics = CsvOut::create(&layout.path("cv/metrics.csv"))?;
    metrics.row(["model_id", "micro_precision", "micro_recall", "micro_f1", "accuracy", "rows"])?;
    let mut folds = CsvOut::create(&layout.path("cv/fold_metrics.csv"))?;
    folds.row(["model_id", "fold", "micro_f1"])?;
    for m in &config.models {
        let out = run_cv_with(
            &table,
            &config.feature_config(m.features),
            &m.spec,
            &m.id,
            &config.cv_options(),
        )?;
        let path = layout.oof(&m.id);
        let mut w = create(&path)?;
        write_oof_csv(&out.oof, &mut w).map_err(CliError::core)?;
        w.flush().map_err(|e| CliError::io(&path, e))?;
        let r = &out.metrics;
        metrics.row([
            m.id.clone(),
            r.micro_precision.to_string(),
            r.micro_recall.to_string(),
            r.micro_f1.to_string(),
            r.accuracy.to_string(),
            out.rows.len().to_string(),
        ])?;
        for (f, v) in r.per_fold_f1.iter().enumerate() {
            folds.row([m.id.clone(), f.to_string(), v.to_string()])?;
        }
        let mut conf = CsvOut::create(&layout.path(&format!("cv/confusion_{}.csv", m.id)))?;
        let mut header = vec!["true_class".to_string()];
        header.extend((0..r.confusion.len()).map(|c| format!("pred_{c}")));
        conf.row(header)?;
        for (t, row) in r.confusion.iter().enumerate() {
            conf.row(std::iter::once(t.to_string()).chain(row.iter().map(|c| c.to_string())))?;
        }
        conf.finish()?;
        eprintln!("cv: {} micro-F1 {:.4} over {} folds", m.id, r.micro_f1, config.cv_k);
    }
    metrics.finish()?;
    folds.finish()
}

pub fn train(config: &RunConfig, layout: &Layout) -> Result<(), CliError> {
    for set in config.feature_sets() {
        require(layout.feature_matrix(set), "features")?;
    }
    let table = load_table(layout)?;
    for m in &config.models {
        let trained = fit_full(
            &table,
            &config.feature_config(m.features),
            &m.spec,
            &m.id,
            &config.cv_options(),
        )?;
        write_json(&layout.model(&m.id), &trained)?;
        eprintln!("train: {} fitted", m.id);
    }
    Ok(())
}

/// OOF matrices of every configured model, checked for row alignment, with
/// the true classes of their rows.
fn load_oof(config: &RunConfig, layout: &Layout) -> Result<(Vec<OofPredictions>, Vec<usize>), CliError> {
    let mut all = Vec::new();
    for m in &config.models {
        let path = require(layout.oof(&m.id), "cv")?;
        let oof = read_oof_csv(open(&path)?).map_err(CliError::core)?;
        if let Some(first) = all.first() {
            let first: &OofPredictions = first;
            if first.row_ids != oof.row_ids {
                return Err(CliError::Artifact {
                    path,
                    message: "rows differ from the other models' OOF files; rerun `skyglow cv`".into(),
                });
            }
        }
        all.push(oof);
    }
    let table = load_table(layout)?;
    let (rows, labels) = labelled_rows(&table)?;
    let ids: Vec<&str> = rows.iter().map(|&i| table.records()[i].id.as_str()).collect();
    if all[0].row_ids.iter().map(String::as_str).ne(ids.iter().copied()) {
        return Err(CliError::Artifact {
            path: layout.oof(&config.models[0].id),
            message: "rows differ from the ingested table; rerun `skyglow cv`".into(),
        });
    }
    Ok((all, labels))
}

pub fn ensemble(config: &RunConfig, layout: &Layout) -> Result<(), CliError> {
    let (oofs, truth) = load_oof(config, layout)?;
    let ids: Vec<String> = oofs.iter().map(|o| o.model_id.clone()).collect();
    let mats: Vec<ProbabilityMatrix> = oofs.iter().map(|o| o.probs.clone()).collect();
    let weights = optimize_weights(&ids, &mats, &truth, &config.ensemble_steps, config.seed).map_err(CliError::core)?;
    let path = layout.weights();
    let mut w = create(&path)?;
    write_weights_csv(&weights, &mut w).map_err(CliError::core)?;
    w.flush().map_err(|e| CliError::io(&path, e))?;

    let mean = mean_blend(&mats).map_err(CliError::core)?;
    let opt = blend(&mats, &weights.weights).map_err(CliError::core)?;
    let mut metrics = CsvOut::create(&layout.path("ensemble/metrics.csv"))?;
    metrics.row(["model_id", "kind", "micro_f1"])?;
    for (id, m) in ids.iter().zip(&mats) {
        metrics.row([id.as_str(), "single", &blended_f1(m, &truth).to_string()])?;
    }
    metrics.row(["ensemble_mean", "ensemble", &blended_f1(&mean, &truth).to_string()])?;
    metrics.row(["ensemble_opt", "ensemble", &weights.objective.to_string()])?;
    metrics.finish()?;
    for (name, probs) in [("mean", mean), ("opt", opt)] {
        let oof = OofPredictions {
            model_id: format!("ensemble_{name}"),
            row_ids: oofs[0].row_ids.clone(),
            folds: oofs[0].folds.clone(),
            probs,
        };
        let path = layout.path(&format!("ensemble/oof_{name}.csv"));
        let mut w = create(&path)?;
        write_oof_csv(&oof, &mut w).map_err(CliError::core)?;
        w.flush().map_err(|e| CliError::io(&path, e))?;
    }
    eprintln!("ensemble: optimised micro-F1 {:.4}, weights {:?}", weights.objective, weights.weights);
    Ok(())
}

pub fn predict(config: &RunConfig, layout: &Layout) -> Result<(), CliError> {
    let input = config
        .predict_input
        .as_ref()
        .ok_or_else(|| CliError::Config("`paths.predict` must name the file to score".into()))?;
    let mut models: Vec<TrainedPipeline> = Vec::new();
    for m in &config.models {
        models.push(read_json(&require(layout.model(&m.id), "train")?)?);
    }
    let weights_path = require(layout.weights(), "ensemble")?;
    let weights = read_weights_csv(open(&weights_path)?).map_err(CliError::core)?;
    let expected: Vec<&str> = config.models.iter().map(|m| m.id.as_str()).collect();
    if weights.model_ids.iter().map(String::as_str).ne(expected.iter().copied()) {
        return Err(CliError::Artifact {
            path: weights_path,
            message: "weights do not match the configured models; rerun `skyglow ensemble`".into(),
        });
    }

    let strictness = if config.strict {
        Strictness::Strict
    } else {
        Strictness::Lenient
    };
    let parsed = parse_observations(open(input)?, strictness).map_err(CliError::core)?;
    for d in &parsed.diagnostics {
        eprintln!("predict: {d}");
    }
    let table = match &config.population {
        Some(_) => {
            let pop = parse_population(open(&require(layout.population(), "ingest")?)?).map_err(CliError::core)?;
            join_population(&parsed.table, &pop)
        }
        None => parsed.table,
    };
    let mats: Vec<ProbabilityMatrix> = models
        .iter()
        .map(|m| m.predict_proba(&table))
        .collect::<Result<_, _>>()?;
    let probs = blend(&mats, &weights.weights).map_err(CliError::core)?;

    let mut out = CsvOut::create(&layout.path("predict/predictions.csv"))?;
    let mut header = vec!["id".to_string(), "predicted_class".into()];
    header.extend((0..N_CLASSES).map(|c| format!("p_class_{c}")));
    out.row(header)?;
    for (i, r) in table.records().iter().enumerate() {
        let mut row = vec![r.id.clone(), probs.argmax(i).to_string()];
        row.extend(probs.row(i).iter().map(|p| p.to_string()));
        out.row(row)?;
    }
    out.finish()?;
    eprintln!("predict: {} rows scored", table.len());
    Ok(())
}

fn copy_into_report(layout: &Layout, rel: &str) -> Result<(), CliError> {
    let from = layout.path(rel);
    let name = Path::new(rel).file_name().expect("artifact names have a file name");
    let to = layout.path("report").join(name);
    fs::copy(&from, &to).map_err(|e| CliError::io(&from, e))?;
    Ok(())
}

pub fn report(config: &RunConfig, layout: &Layout) -> Result<(), CliError> {
    require(layout.path("eda/missingness.csv"), "eda")?;
    let trend_path = require(layout.path("eda/annual_trend.csv"), "eda")?;
    let fold_path = require(layout.path("cv/fold_metrics.csv"), "cv")?;
    let ens_path = require(layout.path("ensemble/metrics.csv"), "ensemble")?;
    fs::create_dir_all(layout.path("report")).map_err(|e| CliError::io(layout.path("report"), e))?;

    let ens = read_csv_rows(&ens_path)?;
    let mut comparison = CsvOut::create(&layout.path("report/model_comparison.csv"))?;
    comparison.row(["model_id", "kind", "micro_f1"])?;
    let mut bars = Vec::new();
    for r in &ens {
        comparison.row(r)?;
        bars.push((r[0].to_string(), parse_f64(&ens_path, &r[2])?));
    }
    comparison.finish()?;

    let mut copies = vec![
        "eda/missingness.csv".to_string(),
        "eda/correlation.csv".into(),
        "eda/annual_trend.csv".into(),
        "cv/fold_metrics.csv".into(),
        "cv/metrics.csv".into(),
    ];
    copies.extend(CategoricalField::ALL.iter().map(|f| format!("eda/category_{}.csv", f.name())));
    for rel in &copies {
        require(layout.path(rel), if rel.starts_with("eda") { "eda" } else { "cv" })?;
        copy_into_report(layout, rel)?;
    }

    if !config.report_charts {
        return Ok(());
    }
    write_text(
        &layout.path("report/model_comparison.svg"),
        &bar_chart("OOF micro-F1 by model", &bars).map_err(CliError::core)?,
    )?;

    let trend_rows = read_csv_rows(&trend_path)?;
    for field in &config.trend_fields {
        let points: Vec<(f64, f64)> = trend_rows
            .iter()
            .filter(|r| &r[0] == field.name())
            .map(|r| Ok((parse_f64(&trend_path, &r[1])?, parse_f64(&trend_path, &r[2])?)))
            .collect::<Result<_, CliError>>()?;
        if points.is_empty() {
            continue;
        }
        let svg = line_chart(
            &format!("Annual mean of {}", field.name()),
            &[LineSeries {
                label: field.name().to_string(),
                points,
            }],
        )
        .map_err(CliError::core)?;
        write_text(&layout.path(&format!("report/trend_{}.svg", field.name())), &svg)?;
    }

    for field in CategoricalField::ALL {
        let path = layout.path(&format!("eda/category_{}.csv", field.name()));
        let rows = read_csv_rows(&path)?;
        let bars: Vec<(String, f64)> = rows
            .iter()
            .map(|r| Ok((r[1].to_string(), parse_f64(&path, &r[3])?)))
            .collect::<Result<_, CliError>>()?;
        if bars.is_empty() {
            continue;
        }
        let svg = bar_chart(&format!("Share of {}", field.name()), &bars).map_err(CliError::core)?;
        write_text(&layout.path(&format!("report/category_{}.svg", field.name())), &svg)?;
    }

    let folds = read_csv_rows(&fold_path)?;
    let mut series: Vec<LineSeries> = Vec::new();
    for m in &config.models {
        let points: Vec<(f64, f64)> = folds
            .iter()
            .filter(|r| r[0] == m.id)
            .map(|r| Ok((parse_f64(&fold_path, &r[1])?, parse_f64(&fold_path, &r[2])?)))
            .collect::<Result<_, CliError>>()?;
        series.push(LineSeries {
            label: m.id.clone(),
            points,
        });
    }
    if series.iter().any(|s| !s.points.is_empty()) {
        let svg = line_chart("Per-fold micro-F1", &series).map_err(CliError::core)?;
        write_text(&layout.path("report/fold_f1.svg"), &svg)?;
    }
    eprintln!("report: written to {}", layout.path("report").display());
    Ok(())
}

/// Runs one stage with the output directory locked and the effective
/// configuration echoed next to the artifacts.
pub fn dispatch(command: Command, config: &RunConfig) -> Result<(), CliError> {
    let _lock = DirLock::acquire(&config.out_dir)?;
    write_text(&config.out_dir.join("effective_config.txt"), &config.echo())?;
    run_stage(command, config)
}

/// Every stage in order; `predict` only when an input file is configured.
pub fn run_all(config: &RunConfig) -> Result<(), CliError> {
    let _lock = DirLock::acquire(&config.out_dir)?;
    write_text(&config.out_dir.join("effective_config.txt"), &config.echo())?;
    for command in Command::PIPELINE {
        if command == Command::Predict && config.predict_input.is_none() {
            continue;
        }
        run_stage(command, config)?;
    }
    Ok(())
}

fn run_stage(command: Command, config: &RunConfig) -> Result<(), CliError> {
    let layout = Layout::new(&config.out_dir);
    match command {
        Command::Ingest => ingest(config, &layout),
        Command::Eda => eda(config, &layout),
        Command::Features => features(config, &layout),
        Command::Cv => cv(config, &layout),
        Command::Train => train(config, &layout),
        Command::Ensemble => ensemble(config, &layout),
        Command::Predict => predict(config, &layout),
        Command::Report => report(config, &layout),
    }
}

/// Reads back a feature matrix written by the `features` stage.
pub fn read_feature_matrix(layout: &Layout, set: FeatureSet) -> Result<FeatureMatrix, CliError> {
    let path = require(layout.feature_matrix(set), "features")?;
    FeatureMatrix::read_csv(open(&path)?).map_err(CliError::core)
}

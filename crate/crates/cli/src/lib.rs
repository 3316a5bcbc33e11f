//! The `skyglow` command-line workflow: ingest → eda → features → cv →
//! train → ensemble → predict → report, driven by one config file.

pub mod commands;
pub mod config;
pub mod error;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use skyglow::dataset::{write_observations, write_population};
use skyglow::synth::{generate_observations, generate_population, SynthParams};

pub use commands::{dispatch, run_all, Command, Layout};
pub use config::{Overrides, RunConfig};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "skyglow", version, about = "Night-sky brightness modelling workflow")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Run configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Global seed; overrides `seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Preset {
    /// Four location blobs, one class each, no missing targets.
    Separable,
    /// Missingness including unlabelled rows.
    Paper,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Validate the input tables and write canonical copies.
    Ingest(RunArgs),
    /// Missingness, category shares, correlations and annual trends.
    Eda(RunArgs),
    /// Fit the feature transforms on the labelled rows.
    Features(RunArgs),
    /// Cross-validate every model and write out-of-fold predictions.
    Cv(RunArgs),
    /// Fit every model on all labelled rows.
    Train(RunArgs),
    /// Blend the out-of-fold predictions and optimise the weights.
    Ensemble(RunArgs),
    /// Score `paths.predict` with the trained models and weights.
    Predict(RunArgs),
    /// Model comparison table, copies of the summaries and SVG charts.
    Report(RunArgs),
    /// Every stage in order.
    Run(RunArgs),
    /// Write a synthetic observation table and census table.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2000)]
        rows: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Preset::Separable)]
        preset: Preset,
    },
}

/// Writes `observations.csv` and `population.csv` into `dir`.
pub fn write_synthetic(dir: &Path, params: &SynthParams) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let obs = generate_observations(params);
    let pop = generate_population(params.seed);
    let mut buf = Vec::new();
    write_observations(&obs, &mut buf).map_err(CliError::core)?;
    let path = dir.join("observations.csv");
    fs::write(&path, &buf).map_err(|e| CliError::io(&path, e))?;
    buf.clear();
    write_population(&pop, &mut buf).map_err(CliError::core)?;
    let path = dir.join("population.csv");
    fs::write(&path, &buf).map_err(|e| CliError::io(&path, e))
}

/// Caps the global thread pool from `SKYGLOW_THREADS` (0 or unset = auto).
pub fn configure_threads() -> Result<(), CliError> {
    let n = match std::env::var("SKYGLOW_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Config(format!("SKYGLOW_THREADS must be a number, got `{v}`")))?,
        Err(_) => 0,
    };
    if n > 0 {
        // A pool that is already initialised keeps its size.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn load(args: &RunArgs) -> Result<RunConfig, CliError> {
    RunConfig::load(
        &args.config,
        &Overrides {
            out_dir: args.out.clone(),
            seed: args.seed,
        },
    )
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let (command, args) = match cli.command {
        CliCommand::Ingest(a) => (Command::Ingest, a),
        CliCommand::Eda(a) => (Command::Eda, a),
        CliCommand::Features(a) => (Command::Features, a),
        CliCommand::Cv(a) => (Command::Cv, a),
        CliCommand::Train(a) => (Command::Train, a),
        CliCommand::Ensemble(a) => (Command::Ensemble, a),
        CliCommand::Predict(a) => (Command::Predict, a),
        CliCommand::Report(a) => (Command::Report, a),
        CliCommand::Run(a) => return run_all(&load(&a)?),
        CliCommand::Synth {
            out,
            rows,
            seed,
            preset,
        } => {
            let params = match preset {
                Preset::Separable => SynthParams::separable(rows, seed),
                Preset::Paper => SynthParams::paper(rows, seed),
            };
            return write_synthetic(&out, &params);
        }
    };
    dispatch(command, &load(&args)?)
}

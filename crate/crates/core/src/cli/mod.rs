//! The `hap` command-line front end.
//!
//! Exit codes: 0 success, 2 configuration or validation error, 3 data or
//! file-format error, 4 numerical failure.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{
    class_split, cmd_eval, cmd_experiment, cmd_predict, cmd_sweep, cmd_synth, cmd_train, roc_table, run_experiment,
    run_sweep, sweep_csv, train_bundle, ExperimentOutcome, SweepParam, SweepRow, TrainOutcome, DECISIONS_FILE,
    MODEL_FILE, REPORT_FILE, ROC_FILE, SCORES_FILE, SIGNS_FILE, SWEEP_FILE, TRAIN_LOG_FILE,
};
pub use config::{parse_config_text, Classifier, CommonArgs, DapPrior, KernelArg, Mode, RunConfig, SideInfo};

use crate::dataio::SynthParams;
use crate::{Error, ErrorKind};

#[derive(Debug, Parser)]
#[command(name = "hap", version, about = "Hypergraph-regularized attribute predictors and zero-shot classification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model on a dataset bundle
    Train(CommonArgs),
    /// Score features with a saved model
    Predict(PredictArgs),
    /// Zero-shot experiment on the bundle's unseen classes
    Zsl(CommonArgs),
    /// N-shot experiment (--n-shot samples per unseen class join training)
    Nshot(CommonArgs),
    /// Attribute AUC report and ROC tables for a saved model
    Eval(EvalArgs),
    /// Zero-shot runs over a grid of one hyperparameter
    Sweep(SweepArgs),
    /// Write a seeded synthetic dataset bundle
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Sample-per-row matrix (csv or binary)
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub param: SweepParam,
    /// Comma-separated values
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub grid: Vec<f64>,
    /// Run grid points on parallel threads
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 25)]
    pub n_classes: usize,
    #[arg(long, default_value_t = 40)]
    pub samples_per_class: usize,
    #[arg(long, default_value_t = 32)]
    pub dim: usize,
    #[arg(long, default_value_t = 12)]
    pub n_attributes: usize,
    #[arg(long, default_value_t = 8.0)]
    pub separation: f64,
    /// Number of trailing classes listed as unseen
    #[arg(long, default_value_t = 5)]
    pub unseen: usize,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn exit_code(e: &Error) -> i32 {
    match e.kind() {
        ErrorKind::Validation => 2,
        ErrorKind::Data => 3,
        ErrorKind::Numerical => 4,
    }
}

pub fn run(cli: Cli) -> crate::Result<()> {
    match cli.command {
        Command::Train(args) => cmd_train(&RunConfig::resolve(&args)?),
        Command::Predict(a) => cmd_predict(&a.model, &a.features, &a.out),
        Command::Zsl(args) => cmd_experiment(&RunConfig::resolve(&args)?, 0),
        Command::Nshot(args) => {
            let cfg = RunConfig::resolve(&args)?;
            cmd_experiment(&cfg, cfg.n_shot)
        }
        Command::Eval(a) => cmd_eval(&a.model, &a.data, &a.out),
        Command::Sweep(a) => cmd_sweep(&RunConfig::resolve(&a.common)?, a.param, &a.grid, a.parallel),
        Command::Synth(a) => {
            let params = SynthParams {
                seed: a.seed,
                n_classes: a.n_classes,
                samples_per_class: a.samples_per_class,
                dim: a.dim,
                n_attributes: a.n_attributes,
                separation: a.separation,
                unseen: a.unseen,
            };
            cmd_synth(&params, &a.out)
        }
    }
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

//! Command-line front end. Every subcommand turns its flags into a
//! [`RunConfig`], overlays them on the optional `--config` file and runs
//! against the merged settings.

mod commands;
pub mod config;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::detect::Aggregation;
use crate::error::CaaError;
pub use config::RunConfig;

/// Error surfaced by the CLI: a machine-readable kind plus a message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(kind: &'static str, message: impl Into<String>) -> Self {
        CliError {
            kind,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "error[{}]: {}", self.kind, self.message)
    }
}

impl std::error::Error for CliError {}

impl From<CaaError> for CliError {
    fn from(e: CaaError) -> Self {
        CliError::new(e.kind(), e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "caa", version, about = "Canonical autocorrelation analysis for single-class anomaly detection")]
pub struct Cli {
    /// Flat TOML file with run settings; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Print the merged settings as TOML and exit without running.
    #[arg(long, global = true)]
    pub dump_config: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset plus a truth sidecar.
    Synth(SynthArgs),
    /// Fit a detector on the normal rows of a dataset.
    Train(TrainArgs),
    /// Score every row of a dataset with a saved detector.
    Score(ScoreArgs),
    /// AUC, best-accuracy threshold and optional 10-fold cross-validation.
    Eval(EvalArgs),
    /// Per-feature counts of how often each feature explains a flagged row.
    Attribute(AttributeArgs),
    /// Run a full evaluation protocol and print a pass/fail table.
    Repro(ReproArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    Planted,
    Spectra,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReproKind {
    BreastCancer,
    Spectra,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelFlags {
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long)]
    pub c2: Option<f64>,
    #[arg(long)]
    pub max_pairs: Option<usize>,
    #[arg(long)]
    pub lambda_grid_size: Option<usize>,
    #[arg(long)]
    pub min_correlation: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Disable the support-split fallback used when no grid point reaches
    /// the sparseness target.
    #[arg(long)]
    pub no_support_split: bool,
    #[arg(long)]
    pub aggregation: Option<Aggregation>,
    /// Number of PCA components for the baseline; default picks by 95% of
    /// the variance.
    #[arg(long)]
    pub k_pca: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    pub kind: SynthKind,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n_background: Option<usize>,
    #[arg(long)]
    pub n_anomalous: Option<usize>,
    #[arg(long)]
    pub bins: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_name = "PATH")]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelFlags,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long, value_name = "PATH")]
    pub model: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub aggregation: Option<Aggregation>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Labeled dataset.
    #[arg(long, value_name = "PATH")]
    pub data: Option<PathBuf>,
    /// Scores file written by `score`, row-aligned with `--data`.
    #[arg(long, value_name = "PATH")]
    pub scores: Option<PathBuf>,
    /// Detector to score `--data` with when no scores file is given.
    #[arg(long, value_name = "PATH")]
    pub model: Option<PathBuf>,
    /// Also run stratified 10-fold cross-validation of CAA and PCA.
    #[arg(long)]
    pub cv: bool,
    #[command(flatten)]
    pub flags: ModelFlags,
}

#[derive(Debug, Args)]
pub struct AttributeArgs {
    #[arg(long, value_name = "PATH")]
    pub model: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub data: Option<PathBuf>,
    /// Count over every row scoring above this value.
    #[arg(long, conflicts_with = "row")]
    pub threshold: Option<f64>,
    /// Report the contributing features of a single row.
    #[arg(long)]
    pub row: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReproArgs {
    pub kind: ReproKind,
    #[arg(long, value_name = "PATH")]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub n_background: Option<usize>,
    #[arg(long)]
    pub n_anomalous: Option<usize>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[command(flatten)]
    pub flags: ModelFlags,
}

impl ModelFlags {
    fn apply(&self, cfg: &mut RunConfig) {
        cfg.c1 = self.c1;
        cfg.c2 = self.c2;
        cfg.max_pairs = self.max_pairs;
        cfg.lambda_grid_size = self.lambda_grid_size;
        cfg.min_correlation = self.min_correlation;
        cfg.max_iter = self.max_iter;
        cfg.tol = self.tol;
        cfg.support_split_fallback = self.no_support_split.then_some(false);
        cfg.aggregation = self.aggregation;
        cfg.k_pca = self.k_pca;
    }
}

impl Cli {
    /// Settings given on the command line, without the config file.
    pub fn flag_config(&self) -> RunConfig {
        let mut cfg = RunConfig {
            seed: self.seed,
            out: self.out.clone(),
            ..RunConfig::default()
        };
        match &self.command {
            Command::Synth(a) => {
                cfg.n = a.n;
                cfg.m = a.m;
                cfg.n_background = a.n_background;
                cfg.n_anomalous = a.n_anomalous;
                cfg.bins = a.bins;
            }
            Command::Train(a) => {
                a.model.apply(&mut cfg);
                cfg.data = a.data.clone();
            }
            Command::Score(a) => {
                cfg.model = a.model.clone();
                cfg.data = a.data.clone();
                cfg.aggregation = a.aggregation;
            }
            Command::Eval(a) => {
                a.flags.apply(&mut cfg);
                cfg.data = a.data.clone();
                cfg.scores = a.scores.clone();
                cfg.model = a.model.clone();
            }
            Command::Attribute(a) => {
                cfg.model = a.model.clone();
                cfg.data = a.data.clone();
                cfg.threshold = a.threshold;
                cfg.row = a.row;
            }
            Command::Repro(a) => {
                a.flags.apply(&mut cfg);
                cfg.data = a.data.clone();
                cfg.n_background = a.n_background;
                cfg.n_anomalous = a.n_anomalous;
                cfg.bins = a.bins;
            }
        }
        cfg
    }

    /// Config file values overlaid with the command-line flags.
    pub fn merged_config(&self) -> CliResult<RunConfig> {
        let base = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        Ok(base.overlay(self.flag_config()))
    }
}

/// Runs a parsed command line, writing human-readable output to `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> CliResult<()> {
    let cfg = cli.merged_config()?;
    if cli.dump_config {
        let text = cfg.to_toml()?;
        stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::new("io_error", e.to_string()))?;
        return Ok(());
    }
    match &cli.command {
        Command::Synth(a) => commands::synth(a.kind, &cfg, stdout),
        Command::Train(_) => commands::train(&cfg, stdout),
        Command::Score(_) => commands::score(&cfg, stdout),
        Command::Eval(a) => commands::eval(&cfg, a.cv, stdout),
        Command::Attribute(_) => commands::attribute(&cfg, stdout),
        Command::Repro(a) => commands::repro(a.kind, &cfg, stdout),
    }
}

/// Parses `args` (including the program name) and runs them. Returns the
/// process exit code; errors go to `stderr` as one structured line.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            let _ = writeln!(stderr, "{}", CliError::new("usage", first));
            return 2;
        }
    };
    match run(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            1
        }
    }
}

//! The `hivesense` command line.
//!
//! Every command resolves and validates its whole configuration before it
//! creates the output directory. Exit codes: 0 success, 1 validation error,
//! 2 runtime failure.

mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::OutputLock;
pub use config::{ExperimentConfig, OUTPUT_ROOT_ENV};

use crate::dsp::FeatureKind;
use crate::error::Error;
use crate::ingest::FoldAssignment;
use crate::models::{Broadcast, BranchFeature, RecipeKind};
use crate::nn::OptimizerKind;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "hivesense", version, about = "Hive health monitoring: features, training, evaluation")]
pub struct Cli {
    /// Experiment config (TOML); flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (default: $HIVESENSE_OUT/<command> or hivesense-out/<command>).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute feature records for every clip in a manifest.
    Extract(ExtractArgs),
    /// Train a recipe on an 80/10/10 split and report test metrics.
    Train(TrainArgs),
    /// Evaluate a saved model on a manifest (or the test ids of a split).
    Evaluate(EvaluateArgs),
    /// k-fold cross-validation of a recipe.
    Crossval(CrossvalArgs),
    /// mAP of YOLO prediction files against YOLO label files.
    DetectEval(DetectArgs),
    /// Class probabilities for one sample.
    Predict(PredictArgs),
    /// Write the synthetic fixture dataset.
    Fixture(FixtureArgs),
}

#[derive(Debug, Args, Default, Clone)]
pub struct DataArgs {
    /// Dataset directory containing `manifest`.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Manifest file (overrides `<dataset>/manifest`).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args, Default, Clone)]
pub struct RecipeArgs {
    /// audio-detector-1d | visual-cnn | audio-cnn2d | audio-lstm | transfer-head | amnn
    #[arg(long)]
    pub recipe: Option<RecipeKind>,
    /// Audio feature: mel | mfcc | stft | chroma.
    #[arg(long)]
    pub feature: Option<FeatureKind>,
    #[arg(long)]
    pub width_divisor: Option<usize>,
    #[arg(long)]
    pub image_size: Option<usize>,
    #[arg(long)]
    pub spectrogram_size: Option<usize>,
    #[arg(long)]
    pub seq_len: Option<usize>,
    #[arg(long)]
    pub freeze_backbone: bool,
    #[arg(long)]
    pub attention_width: Option<usize>,
    /// segment | full
    #[arg(long, value_parser = parse_broadcast)]
    pub broadcast: Option<Broadcast>,
    /// flatten | dense16
    #[arg(long, value_parser = parse_branch)]
    pub branch_feature: Option<BranchFeature>,
}

#[derive(Debug, Args, Default, Clone)]
pub struct FitArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// adam | sgd
    #[arg(long)]
    pub optimizer: Option<String>,
    /// Momentum for sgd.
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub lambda_image: Option<f64>,
    #[arg(long)]
    pub lambda_sound: Option<f64>,
    /// Stop once training accuracy reaches this value.
    #[arg(long)]
    pub stop_at_train_accuracy: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Comma-separated feature kinds (default: all four).
    #[arg(long, value_delimiter = ',')]
    pub features: Option<Vec<FeatureKind>>,
    /// Also write condensed vectors.
    #[arg(long)]
    pub vectors: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub recipe: RecipeArgs,
    #[command(flatten)]
    pub fit: FitArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Model file written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Split file written by `train`; evaluates its test ids only.
    #[arg(long)]
    pub split: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CrossvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub recipe: RecipeArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Number of folds (default 5).
    #[arg(long)]
    pub k: Option<usize>,
    /// Plain shuffled folds instead of label-stratified ones.
    #[arg(long)]
    pub random_folds: bool,
    /// Train folds one after another.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Dataset directory; defaults labels/ and predictions/ under it.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Directory of YOLO label files.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Directory of prediction files (`class cx cy w h confidence`).
    #[arg(long)]
    pub predictions: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub image: Option<PathBuf>,
    #[arg(long)]
    pub audio: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FixtureArgs {
    #[arg(long, default_value_t = 6)]
    pub per_class: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

fn parse_broadcast(s: &str) -> Result<Broadcast, String> {
    match s {
        "segment" => Ok(Broadcast::Segment),
        "full" => Ok(Broadcast::Full),
        _ => Err(format!("'{s}' is not segment or full")),
    }
}

fn parse_branch(s: &str) -> Result<BranchFeature, String> {
    match s {
        "flatten" => Ok(BranchFeature::Flatten),
        "dense16" => Ok(BranchFeature::Dense16),
        _ => Err(format!("'{s}' is not flatten or dense16")),
    }
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    Validation(Error),
    Runtime(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }

    pub fn error(&self) -> &Error {
        match self {
            CliError::Validation(e) | CliError::Runtime(e) => e,
        }
    }
}

pub(crate) trait Classify<T> {
    fn invalid(self) -> Result<T, CliError>;
    fn runtime(self) -> Result<T, CliError>;
}

impl<T> Classify<T> for crate::Result<T> {
    fn invalid(self) -> Result<T, CliError> {
        self.map_err(CliError::Validation)
    }

    fn runtime(self) -> Result<T, CliError> {
        self.map_err(CliError::Runtime)
    }
}

impl RecipeArgs {
    fn apply(&self, c: &mut ExperimentConfig) {
        let r = &mut c.recipe;
        if let Some(v) = self.recipe {
            r.kind = v;
        }
        if let Some(v) = self.feature {
            r.feature = v;
        }
        if let Some(v) = self.width_divisor {
            r.width_divisor = v;
        }
        if let Some(v) = self.image_size {
            r.image_size = v;
        }
        if let Some(v) = self.spectrogram_size {
            r.spectrogram_size = v;
        }
        if let Some(v) = self.seq_len {
            r.seq_len = v;
        }
        if self.freeze_backbone {
            r.freeze_backbone = true;
        }
        if let Some(v) = self.attention_width {
            r.attention_width = v;
        }
        if let Some(v) = self.broadcast {
            r.broadcast = v;
        }
        if let Some(v) = self.branch_feature {
            r.branch_feature = v;
        }
    }
}

impl FitArgs {
    fn apply(&self, c: &mut ExperimentConfig) -> crate::Result<()> {
        if let Some(v) = self.seed {
            c.seed = Some(v);
        }
        let f = &mut c.fit;
        if let Some(v) = self.epochs {
            f.train.epochs = v;
        }
        if let Some(v) = self.batch_size {
            f.train.batch_size = v;
        }
        if let Some(v) = self.patience {
            f.train.patience = v;
        }
        if let Some(v) = self.lr {
            f.learning_rate = v;
        }
        if let Some(v) = self.lambda_image {
            f.lambda_image = v;
        }
        if let Some(v) = self.lambda_sound {
            f.lambda_sound = v;
        }
        if self.stop_at_train_accuracy.is_some() {
            f.train.stop_at_train_accuracy = self.stop_at_train_accuracy;
        }
        match self.optimizer.as_deref() {
            None => {
                if let (Some(m), OptimizerKind::SgdMomentum { momentum }) = (self.momentum, &mut f.optimizer) {
                    *momentum = m;
                }
            }
            Some("adam") => {
                f.optimizer = OptimizerKind::Adam {
                    beta1: 0.9,
                    beta2: 0.999,
                    eps: 1e-8,
                }
            }
            Some("sgd") => {
                f.optimizer = OptimizerKind::SgdMomentum {
                    momentum: self.momentum.unwrap_or(0.9),
                }
            }
            Some(other) => return Err(Error::Validation(format!("unknown optimizer '{other}' (adam, sgd)"))),
        }
        Ok(())
    }
}

impl DataArgs {
    fn apply(&self, c: &mut ExperimentConfig) {
        if self.dataset.is_some() {
            c.dataset = self.dataset.clone();
        }
        if self.manifest.is_some() {
            c.manifest = self.manifest.clone();
        }
    }
}

/// Config file merged with flags.
pub fn resolve_config(cli: &Cli) -> crate::Result<ExperimentConfig> {
    let mut c = match &cli.config {
        Some(p) => ExperimentConfig::load(p).map_err(|e| match e {
            Error::Io { path, source } => Error::Validation(format!("cannot read config {}: {source}", path.display())),
            other => other,
        })?,
        None => ExperimentConfig::default(),
    };
    if cli.out.is_some() {
        c.output = cli.out.clone();
    }
    match &cli.command {
        Command::Extract(a) => {
            a.data.apply(&mut c);
            if let Some(f) = &a.features {
                c.features = f.clone();
            }
        }
        Command::Train(a) => {
            a.data.apply(&mut c);
            a.recipe.apply(&mut c);
            a.fit.apply(&mut c)?;
        }
        Command::Crossval(a) => {
            a.data.apply(&mut c);
            a.recipe.apply(&mut c);
            a.fit.apply(&mut c)?;
            if let Some(k) = a.k {
                c.k = k;
            }
            if a.random_folds {
                c.random_folds = true;
            }
        }
        Command::Evaluate(a) => a.data.apply(&mut c),
        Command::DetectEval(a) => {
            if a.dataset.is_some() {
                c.dataset = a.dataset.clone();
            }
        }
        Command::Predict(_) | Command::Fixture(_) => {}
    }
    if let Some(s) = c.seed {
        c.recipe.seed = s;
        c.fit.train.seed = s;
    }
    Ok(c)
}

pub(crate) fn fold_assignment(c: &ExperimentConfig) -> FoldAssignment {
    if c.random_folds {
        FoldAssignment::Random
    } else {
        FoldAssignment::Stratified
    }
}

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve_config(cli).invalid()?;
    match &cli.command {
        Command::Extract(a) => commands::extract(&cfg, a),
        Command::Train(_) => commands::train(&cfg),
        Command::Evaluate(a) => commands::evaluate(&cfg, a),
        Command::Crossval(a) => commands::crossval(&cfg, a),
        Command::DetectEval(a) => commands::detect_eval(&cfg, a),
        Command::Predict(a) => commands::predict(a),
        Command::Fixture(a) => commands::fixture(&cfg, a),
    }
}

/// Parses `args`, runs, prints errors and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let kind = match e {
                CliError::Validation(_) => "invalid configuration",
                CliError::Runtime(_) => "failed",
            };
            eprintln!("hivesense: {kind}: {}", e.error());
            e.exit_code()
        }
    }
}

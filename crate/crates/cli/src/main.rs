//! `fatiguelab` command-line front end.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use config::RunConfig;

#[derive(Debug, Parser)]
#[command(
    name = "fatiguelab",
    version,
    about = "Multimodal fatigue detection from ECG, EDA, EMG and EEG"
)]
struct Cli {
    /// JSON run configuration; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Log progress to stderr.
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic study with a manifest.
    Synth(SynthArgs),
    /// Validate a manifest and print block and VAS summaries.
    IngestCheck(ManifestArg),
    /// Write the example cache for one window plan.
    Features(FeaturesArgs),
    /// Train one model and write the model artifact.
    Train(TrainArgs),
    /// Run the evaluation grid and write the report.
    Evaluate(EvaluateArgs),
    /// Render a report file as text.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    subjects: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    block_seconds: Option<f64>,
    /// Cognitive-fatigue effect scale (0 removes the effect).
    #[arg(long)]
    effect_cf: Option<f64>,
    /// Physical-fatigue effect scale (0 removes the effect).
    #[arg(long)]
    effect_pf: Option<f64>,
}

#[derive(Debug, Args)]
struct ManifestArg {
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DataArgs {
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// CF or PF.
    #[arg(long)]
    target: Option<String>,
    /// eeg, physio or all.
    #[arg(long)]
    modality: Option<String>,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Principal components for feature models.
    #[arg(long)]
    pca: Option<usize>,
    /// uniform or balanced.
    #[arg(long)]
    class_weight: Option<String>,
    #[arg(long)]
    sequence_step_hz: Option<f64>,
    #[arg(long)]
    lstm_hidden: Option<usize>,
    #[arg(long)]
    lstm_epochs: Option<usize>,
    #[arg(long)]
    rf_trees: Option<usize>,
}

#[derive(Debug, Args)]
struct FeaturesArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Seconds (`10`, `10s`), `window/stride` or `full`.
    #[arg(long)]
    window: Option<String>,
    /// feature or sequence.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    sequence_step_hz: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    window: Option<String>,
    /// logreg, svm, rf or lstm.
    #[arg(long = "model")]
    kind: Option<String>,
    /// Train on every subject instead of the training and validation split.
    #[arg(long)]
    all_subjects: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Comma-separated window plans, or `grid`.
    #[arg(long)]
    window: Option<String>,
    /// Comma-separated models, or `all`.
    #[arg(long = "model")]
    kind: Option<String>,
    #[arg(long)]
    cv_folds: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Report JSON written by `evaluate`.
    #[arg(long)]
    report: PathBuf,
    /// Write the text here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(fatiguelab::Error),
}

impl From<fatiguelab::Error> for CliError {
    fn from(e: fatiguelab::Error) -> Self {
        CliError::Core(e)
    }
}

#[derive(Serialize)]
struct ErrorLine<'a> {
    exit: u8,
    kind: &'a str,
    message: String,
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(fatiguelab::Error::Contract(_)) => 3,
            CliError::Core(_) => 2,
        }
    }

    fn kind(&self) -> &'static str {
        use fatiguelab::Error as E;
        match self {
            CliError::Usage(_) => "usage",
            CliError::Core(e) => match e {
                E::InvalidSpec(_) => "invalid_spec",
                E::Data(_) | E::EmptySlice { .. } => "data",
                E::Contract(_) => "contract",
                E::Alignment(_) => "alignment",
                E::Ingest { .. } => "ingest",
                E::Split(_) => "split",
                E::Training(_) => "training",
                E::Io { .. } => "io",
                E::Serde(_) => "serde",
            },
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
        }
    }

    fn report(&self) -> ExitCode {
        let line = ErrorLine {
            exit: self.exit_code(),
            kind: self.kind(),
            message: self.message(),
        };
        let json =
            serde_json::to_string(&line).unwrap_or_else(|_| format!("{{\"exit\":{}}}", line.exit));
        eprintln!("error: {json}");
        ExitCode::from(line.exit)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.render().to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            let msg = first.trim_start_matches("error: ").to_string();
            return CliError::Usage(msg).report();
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.report(),
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("FATIGUELAB_THREADS") else {
        return Ok(());
    };
    let n: usize = value.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Usage(format!(
            "FATIGUELAB_THREADS must be a positive integer, got {value:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("FATIGUELAB_THREADS: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let file = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let class_weight = |s: &Option<String>| -> Result<_, CliError> {
        s.as_deref()
            .map(|v| serde_json::from_value(serde_json::Value::String(v.to_string())))
            .transpose()
            .map_err(|_| CliError::Usage("--class-weight must be uniform or balanced".into()))
    };
    let flags = match &cli.command {
        Command::Synth(a) => RunConfig {
            subjects: a.subjects,
            seed: a.seed,
            out: a.out.clone(),
            block_seconds: a.block_seconds,
            effect_cf: a.effect_cf,
            effect_pf: a.effect_pf,
            ..RunConfig::default()
        },
        Command::IngestCheck(a) => RunConfig {
            manifest: a.manifest.clone(),
            ..RunConfig::default()
        },
        Command::Features(a) => RunConfig {
            window: a.window.clone(),
            mode: a.mode.clone(),
            sequence_step_hz: a.sequence_step_hz,
            out: a.out.clone(),
            ..data_config(&a.data)
        },
        Command::Train(a) => RunConfig {
            window: a.window.clone(),
            model: a.kind.clone(),
            out: a.out.clone(),
            class_weight: class_weight(&a.model.class_weight)?,
            ..model_config(&a.model, data_config(&a.data))
        },
        Command::Evaluate(a) => RunConfig {
            window: a.window.clone(),
            model: a.kind.clone(),
            cv_folds: a.cv_folds,
            out: a.out.clone(),
            class_weight: class_weight(&a.model.class_weight)?,
            ..model_config(&a.model, data_config(&a.data))
        },
        Command::Report(a) => return commands::report(&a.report, a.out.as_deref()),
    };
    let cfg = flags.or(file);
    match cli.command {
        Command::Synth(_) => commands::synth(&cfg),
        Command::IngestCheck(_) => commands::ingest_check(&cfg),
        Command::Features(_) => commands::features(&cfg),
        Command::Train(a) => commands::train(&cfg, a.all_subjects),
        Command::Evaluate(_) => commands::evaluate(&cfg),
        Command::Report(_) => unreachable!("handled above"),
    }
}

fn data_config(a: &DataArgs) -> RunConfig {
    RunConfig {
        manifest: a.manifest.clone(),
        target: a.target.clone(),
        modality: a.modality.clone(),
        ..RunConfig::default()
    }
}

fn model_config(a: &ModelArgs, base: RunConfig) -> RunConfig {
    RunConfig {
        seed: a.seed,
        pca: a.pca,
        sequence_step_hz: a.sequence_step_hz,
        lstm_hidden: a.lstm_hidden,
        lstm_epochs: a.lstm_epochs,
        rf_trees: a.rf_trees,
        ..base
    }
}

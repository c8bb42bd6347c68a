use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use lenslevel::features::{FeatureMatrix, FeatureSet};
use lenslevel::labeler::LabelVector;
use lenslevel::learn::{evaluate, Hyperparameters, ModelKind, ModelSpec};
use lenslevel::pipeline::{Pipeline, PipelineConfig, Step};
use lenslevel::synth::{generate, write_sample, SynthConfig};

/// Infer photography expertise from photo-sharing records.
#[derive(Parser)]
#[command(name = "lenslevel", version)]
struct Cli {
    /// Only log warnings and errors.
    #[arg(short, long, global = true)]
    quiet: bool,

    /// Log debug output.
    #[arg(short, long, global = true, conflicts_with = "quiet")]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Pipeline config (JSON).
    #[arg(long, default_value = "lenslevel.json")]
    config: PathBuf,

    /// Run directory; overrides `out_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate the tables, apply the activity filter and trim.
    Ingest(ConfigArgs),
    /// Normalise comment text.
    Textprep(ConfigArgs),
    /// Compute per-comment text measures.
    Textfeat(ConfigArgs),
    /// Derive ground-truth labels from occupations.
    Label(ConfigArgs),
    /// Aggregate per-user feature matrices for every feature set.
    Featurize(ConfigArgs),
    /// Cross-validate one model on one feature matrix.
    Train(TrainArgs),
    /// Cross-validate the full model grid and write the report tables.
    EvaluateAll(ConfigArgs),
    /// Correlation matrix of social-activity and score summaries.
    Correlate(ConfigArgs),
    /// Compare professionals and non-professionals feature by feature.
    Characterize(ConfigArgs),
    /// Run every step, skipping those whose inputs are unchanged.
    Run(ConfigArgs),
    /// Write a deterministic synthetic dataset.
    Synth(SynthArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Feature set to train on; the matrix is projected onto its columns.
    #[arg(long = "set")]
    set: FeatureSet,

    #[arg(long)]
    model: ModelKind,

    #[arg(long, default_value_t = 10)]
    k: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// features.csv written by `featurize`.
    #[arg(long)]
    features: PathBuf,

    /// labels.json written by `label`.
    #[arg(long)]
    labels: PathBuf,

    /// Hyperparameters (JSON); defaults when omitted.
    #[arg(long)]
    hyperparameters: Option<PathBuf>,

    /// Report destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Directory for users.jsonl, photos.jsonl and comments.jsonl.
    #[arg(long)]
    out: PathBuf,

    #[arg(long, default_value_t = 200)]
    users: usize,

    #[arg(long, default_value_t = SynthConfig::default().seed)]
    seed: u64,
}

fn pipeline(args: &ConfigArgs) -> anyhow::Result<Pipeline> {
    let mut cfg = PipelineConfig::load(&args.config)?;
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    Ok(Pipeline::new(cfg)?)
}

fn run_steps(args: &ConfigArgs, steps: &[Step]) -> anyhow::Result<()> {
    let p = pipeline(args)?;
    let outcome = p.run_steps(steps)?;
    log::info!(
        "{} step(s) run, {} skipped; artifacts in {}",
        outcome.executed.len(),
        outcome.skipped.len(),
        p.dir().display()
    );
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| lenslevel::Error::Config(format!("{}: {e}", path.display())).into())
}

fn train(args: &TrainArgs) -> anyhow::Result<()> {
    let matrix = FeatureMatrix::read_csv(&args.features)?;
    let matrix = if matrix.feature_set == args.set {
        matrix
    } else {
        matrix.project(args.set)?
    };
    let labels: LabelVector = read_json(&args.labels)?;
    let params: Hyperparameters = match &args.hyperparameters {
        Some(p) => read_json(p)?,
        None => Hyperparameters::default(),
    };
    let spec = ModelSpec::new(args.model, args.seed).with_params(params);
    let out = evaluate(&spec, &matrix, &labels, args.k)?;
    let r = &out.report;
    log::info!(
        "{} on {}: accuracy {:.4}, AUC {:.4}, F1 {:.4}",
        r.model,
        args.set,
        r.accuracy,
        r.auc,
        r.f1
    );
    let json = serde_json::to_string_pretty(r)? + "\n";
    match &args.out {
        Some(path) => std::fs::write(path, json).with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{json}"),
    }
    Ok(())
}

fn synth(args: &SynthArgs) -> anyhow::Result<()> {
    let cfg = SynthConfig {
        n_users: args.users,
        seed: args.seed,
        ..SynthConfig::default()
    };
    let data = generate(&cfg)?;
    write_sample(&data, &args.out)?;
    log::info!(
        "wrote {} users, {} photos, {} comments to {}",
        data.users.len(),
        data.photos.len(),
        data.comments.len(),
        args.out.display()
    );
    Ok(())
}

fn dispatch(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Ingest(a) => run_steps(a, &[Step::Ingest]),
        Command::Textprep(a) => run_steps(a, &[Step::Textprep]),
        Command::Textfeat(a) => run_steps(a, &[Step::Textfeat]),
        Command::Label(a) => run_steps(a, &[Step::Label]),
        Command::Featurize(a) => run_steps(a, &[Step::Featurize]),
        Command::Train(a) => train(a),
        Command::EvaluateAll(a) => run_steps(a, &[Step::Evaluate, Step::Report]),
        Command::Correlate(a) => run_steps(a, &[Step::Correlate]),
        Command::Characterize(a) => run_steps(a, &[Step::Characterize]),
        Command::Run(a) => run_steps(a, &Step::ALL),
        Command::Synth(a) => synth(a),
    }
}

/// 2 for bad input or configuration, 1 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<lenslevel::Error>() {
            return if e.is_validation() { 2 } else { 1 };
        }
        if let Some(e) = cause.downcast_ref::<std::io::Error>() {
            return if e.kind() == std::io::ErrorKind::NotFound { 2 } else { 1 };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet {
        "warn"
    } else if cli.verbose {
        "debug"
    } else {
        "info"
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

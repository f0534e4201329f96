use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use cpdrums::commands::{self, data, evaluate, generate, preprocess, train};
use cpdrums::config::{parse_tau, Overrides, RunConfig};
use cpdrums_core::metrics::MetricConfig;
use cpdrums_core::nn::Preset;
use serde::Serialize;

/// Conditional drum generation: corpus preparation, training, generation
/// and evaluation.
#[derive(Debug, Parser)]
#[command(name = "cpdrums", version)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the config's model preset.
    #[arg(long, global = true, value_parser = parse_preset)]
    preset: Option<Preset>,
    /// Sampling temperature: a positive number, "uniform" for U(0.8, 1.2) or "greedy".
    #[arg(long, global = true, value_parser = check_tau)]
    tau: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Segment the corpus into phrases and split them 8:1:1.
    Preprocess,
    /// Build the encoder and decoder vocabularies.
    Vocab,
    /// Encode every split to token files.
    Tokenize,
    /// Train, resuming from the last checkpoint unless --fresh is given.
    Train {
        #[arg(long)]
        fresh: bool,
        /// Stop after this many epochs in this invocation.
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Generate drums for the seed phrases of a split.
    Generate {
        /// Checkpoint file; defaults to the best one.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        split: Option<String>,
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Compare generated MIDI files with ground truth, paired by file name.
    Evaluate {
        #[arg(long)]
        generated: Option<PathBuf>,
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Rhythm features of one MIDI file, or COSIATEC compression of a point set.
    Metrics {
        #[arg(long, conflicts_with = "points", required_unless_present = "points")]
        midi: Option<PathBuf>,
        /// Text file with one "x y" point per line.
        #[arg(long)]
        points: Option<PathBuf>,
    },
    /// Run every stage from preprocessing to evaluation.
    Pipeline,
    /// Write the bundled toy corpus.
    ToyCorpus {
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    Preset::from_name(s).ok_or_else(|| format!("unknown preset {s:?}; expected desk or paper"))
}

fn check_tau(s: &str) -> Result<String, String> {
    parse_tau(s).map(|_| s.to_owned()).map_err(|e| e.to_string())
}

fn load(cli: &Cli) -> Result<RunConfig> {
    let path = cli.config.as_deref().context("--config is required for this command")?;
    RunConfig::load(path, &Overrides { seed: cli.seed, preset: cli.preset, tau: cli.tau.clone() })
}

fn metric_config(cli: &Cli) -> Result<MetricConfig> {
    match &cli.config {
        Some(_) => Ok(load(cli)?.settings.metric_config()),
        None => Ok(MetricConfig::default()),
    }
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

fn run(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Preprocess => json(&preprocess::run(&load(cli)?)?),
        Command::Vocab => json(&data::vocab(&load(cli)?)?),
        Command::Tokenize => json(&data::tokenize(&load(cli)?)?),
        Command::Train { fresh, epochs } => {
            json(&train::run(&load(cli)?, &train::TrainOptions { fresh: *fresh, epochs: *epochs })?)
        }
        Command::Generate { checkpoint, split, limit } => json(&generate::run(
            &load(cli)?,
            &generate::GenerateArgs { checkpoint: checkpoint.clone(), split: split.clone(), limit: *limit },
        )?),
        Command::Evaluate { generated, truth } => {
            let bundle = evaluate::run(
                &load(cli)?,
                &evaluate::EvaluateArgs { generated: generated.clone(), truth: truth.clone() },
            )?;
            eprintln!("{}\n{}", bundle.density_table, bundle.diff_table);
            json(&bundle)
        }
        Command::Metrics { midi, points } => match (midi, points) {
            (Some(m), _) => json(&evaluate::midi_metrics(m, &metric_config(cli)?)?),
            (None, Some(p)) => json(&evaluate::point_metrics(p)?),
            (None, None) => unreachable!("clap requires one of --midi and --points"),
        },
        Command::Pipeline => json(&commands::pipeline(&load(cli)?)?),
        Command::ToyCorpus { out } => {
            let paths = cpdrums::toy::write_toy_corpus(out)?;
            json(&serde_json::json!({
                "stage": "toy-corpus",
                "files": paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            }))
        }
    }
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    status: &'static str,
    command: &'a str,
    message: String,
    causes: Vec<String>,
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Preprocess => "preprocess",
        Command::Vocab => "vocab",
        Command::Tokenize => "tokenize",
        Command::Train { .. } => "train",
        Command::Generate { .. } => "generate",
        Command::Evaluate { .. } => "evaluate",
        Command::Metrics { .. } => "metrics",
        Command::Pipeline => "pipeline",
        Command::ToyCorpus { .. } => "toy-corpus",
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            println!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let report = ErrorReport {
                status: "error",
                command: command_name(&cli.command),
                message: e.to_string(),
                causes: e.chain().skip(1).map(|c| c.to_string()).collect(),
            };
            eprintln!("{}", serde_json::to_string(&report).unwrap_or_else(|_| format!("{e:#}")));
            ExitCode::FAILURE
        }
    }
}

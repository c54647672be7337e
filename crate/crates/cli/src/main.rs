mod commands;
mod config;
mod context;
mod manifest;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{expand, extract, judge, score, tune};

/// Edit-level validity judging and reference-based evaluation for
/// grammatical error correction.
#[derive(Debug, Parser)]
#[command(name = "editval", version)]
struct Cli {
    /// Seed for every random choice (demonstration sampling).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Upper bound on concurrent judge calls and worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// TOML configuration; flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert corpora and list extracted edits.
    Extract(extract::ExtractArgs),
    /// Build single-edit contrast pairs for every false positive.
    Pairs(extract::PairsArgs),
    /// Judge a pair dump.
    Judge(judge::JudgeCmd),
    /// Score system outputs against references.
    Score(score::ScoreArgs),
    /// Grid-search alpha and gamma against human judgments.
    Tune(tune::TuneArgs),
    /// Correlate metric scores with human judgments.
    Metaeval(tune::MetaevalArgs),
    /// Grow reference sets with generated, judge-filtered corrections.
    Expand(expand::ExpandArgs),
    /// Reference-count statistics of an expanded corpus.
    Stats(expand::StatsArgs),
}

/// Bad invocation: reported with exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let ctx = context::Ctx::new(cli.config.as_deref(), cli.seed, cli.jobs)?;
    match cli.command {
        Command::Extract(a) => extract::run_extract(&ctx, a),
        Command::Pairs(a) => extract::run_pairs(&ctx, a),
        Command::Judge(a) => judge::run(&ctx, a),
        Command::Score(a) => score::run(&ctx, a),
        Command::Tune(a) => tune::run_tune(&ctx, a),
        Command::Metaeval(a) => tune::run_metaeval(&ctx, a),
        Command::Expand(a) => expand::run_expand(&ctx, a),
        Command::Stats(a) => expand::run_stats(&ctx, a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

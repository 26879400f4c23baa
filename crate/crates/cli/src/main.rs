//! `samlp` — train, score, explain and benchmark profile-based bot
//! detection models from the command line.
//!
//! Every command is deterministic given its flags: the seed drives all
//! randomness and `--jobs` never changes results, only wall-clock time.

mod commands;
mod config;
mod failure;
mod inputs;

use clap::{Parser, Subcommand};

use samlp_core::artifact::ARTIFACT_VERSION;

use crate::failure::Failure;

fn version_banner() -> &'static str {
    static BANNER: std::sync::OnceLock<String> = std::sync::OnceLock::new();
    BANNER.get_or_init(|| {
        format!(
            "{} (artifact format {ARTIFACT_VERSION})",
            env!("CARGO_PKG_VERSION")
        )
    })
}

#[derive(Parser)]
#[command(
    name = "samlp",
    version = version_banner(),
    about = "Bot/human classification of social profiles: feature extraction, \
             semi-automatic model training, offline scoring, Shapley \
             explanations and benchmark scenarios."
)]
struct Cli {
    /// Cap on worker threads; 0 uses every core. Results are identical at
    /// any setting.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Join user records with labels and write a feature CSV.
    Extract(commands::extract::ExtractArgs),
    /// Run the training pipeline; write a model artifact and report.
    Train(commands::train::TrainArgs),
    /// Score user records with a trained artifact, offline.
    Predict(commands::predict::PredictArgs),
    /// Attribute scores to features with Shapley values.
    Explain(commands::explain::ExplainArgs),
    /// Run a benchmark scenario and write its report.
    Bench(commands::bench::BenchArgs),
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build_global()
        .map_err(|e| Failure::Internal(format!("cannot build thread pool: {e}")))?;

    match &cli.command {
        Command::Extract(args) => commands::extract::run(args),
        Command::Train(args) => commands::train::run(args),
        Command::Predict(args) => commands::predict::run(args),
        Command::Explain(args) => commands::explain::run(args),
        Command::Bench(args) => commands::bench::run(args),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(failure) = dispatch(&cli) {
        eprintln!("error: {}", failure.message());
        std::process::exit(failure.code());
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use biasbench::commands;
use biasbench::config::RunConfig;

/// Cross-dataset evaluation and bias-audit harness for binary text
/// classification.
#[derive(Parser)]
#[command(name = "biasbench", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Path to the JSON run configuration.
    #[arg(long, global = true, default_value = "biasbench.json")]
    config: PathBuf,

    /// Override the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic corpora and document pool.
    Synth,
    /// Clean and label-harmonize the configured datasets.
    Clean,
    /// Cross-validate the hyperparameter grid on each dataset.
    Cv,
    /// Evaluate every dataset's top models on the other datasets.
    CrossEval,
    /// OOV ratios, drop correlations, and plot data over the experiments.
    Analyze,
    /// Keyword-expand a dataset from the pool and estimate contamination.
    Dqe,
}

fn run(cli: Cli) -> biasbench::Result<()> {
    let mut config = RunConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = cli.out {
        config.out_dir = out;
    }
    match cli.command {
        Command::Synth => commands::run_synth(&config),
        Command::Clean => commands::run_clean(&config),
        Command::Cv => commands::run_cv(&config),
        Command::CrossEval => commands::run_cross_eval(&config),
        Command::Analyze => commands::run_analyze(&config),
        Command::Dqe => commands::run_dqe(&config),
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("BIASBENCH_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

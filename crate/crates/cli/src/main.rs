mod backends;
mod cmd;
mod predictions;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cmd::Outcome;
use settings::{Common, Settings};

/// Multi-view element-order prompting for aspect sentiment tuples.
#[derive(Parser, Debug)]
#[command(name = "mvp", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Score every element order on the training split and keep the top m.
    SelectOrders,
    /// Write `input<TAB>target` training pairs for the selected orders.
    BuildTrain,
    /// Generate every view per sentence and aggregate them.
    Infer,
    /// Score a predictions file against the gold split.
    Evaluate {
        /// JSONL written by infer; `--strategy` re-aggregates its views.
        #[arg(long)]
        predictions: Option<PathBuf>,
        /// Summarize a results file written by earlier evaluations.
        #[arg(long)]
        runs: Option<PathBuf>,
    },
    /// Sentence and polarity counts per split.
    Stats {
        /// Expected counts; mismatches exit non-zero.
        #[arg(long)]
        expect: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let settings = Settings::resolve(&cli.common)?;
    match cli.command {
        Command::SelectOrders => cmd::select_orders(&settings),
        Command::BuildTrain => cmd::build_train(&settings),
        Command::Infer => cmd::infer(&settings),
        Command::Evaluate { predictions, runs } => match (predictions, runs) {
            (_, Some(runs)) => cmd::report_runs(&runs),
            (Some(p), None) => cmd::evaluate(&settings, &p, cli.common.strategy),
            (None, None) => anyhow::bail!("evaluate needs --predictions or --runs"),
        },
        Command::Stats { expect } => cmd::stats(&settings, expect.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Partial) => ExitCode::from(2),
        Ok(Outcome::Mismatch) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use coref::commands::{self, PredictArgs, StatsArgs, TrainArgs};

#[derive(Parser)]
#[command(name = "coref", version, about = "Coreference resolution: train, predict, evaluate, count")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and save the best checkpoint by dev CoNLL-F1.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        train: Option<PathBuf>,
        #[arg(long)]
        dev: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Predict clusters and write them in the input's format.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Cluster the gold mentions instead of extracted ones.
        #[arg(long)]
        gold_mentions: bool,
        #[arg(long)]
        threshold: Option<f64>,
        /// Keep single-mention clusters.
        #[arg(long)]
        singletons: bool,
    },
    /// Score predictions against gold as JSON.
    Evaluate {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
    },
    /// Print candidate and pair counts per corpus.
    Stats {
        #[arg(long = "input", required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 30)]
        span_len_cap: usize,
        #[arg(long, default_value_t = 0.4)]
        top_k: f64,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Train { config, train, dev, out } => {
            commands::cmd_train(&TrainArgs { config, train, dev, out }, |line| eprintln!("{line}"))
        }
        Command::Predict {
            model,
            input,
            output,
            gold_mentions,
            threshold,
            singletons,
        } => commands::cmd_predict(&PredictArgs {
            model,
            input,
            output,
            gold_mentions,
            threshold,
            singletons,
        }),
        Command::Evaluate { gold, pred } => {
            println!("{}", commands::cmd_evaluate(&gold, &pred)?);
            Ok(())
        }
        Command::Stats {
            inputs,
            model,
            span_len_cap,
            top_k,
        } => {
            print!(
                "{}",
                commands::cmd_stats(&StatsArgs {
                    inputs,
                    model,
                    span_len_cap,
                    top_k,
                })?
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use biaffine_srl::decomposition::{HeadSource, TaskMode};
use clap::{Parser, Subcommand, ValueEnum};

use commands::CliError;

/// Dependency-based semantic role labeling with a word-pair biaffine scorer.
#[derive(Parser)]
#[command(name = "srl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Source {
    Gold,
    Predicted,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write the best checkpoint.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the configured seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Label a CoNLL file with a trained model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, value_parser = parse_mode)]
        mode: TaskMode,
    },
    /// Score predictions against gold annotation.
    Evaluate {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long, value_parser = parse_mode)]
        mode: TaskMode,
        /// Tab-separated key/value records.
        #[arg(long)]
        tsv: bool,
    },
    /// Argument coverage and candidate reduction of syntactic pruning per order.
    Stats {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        k_max: usize,
        #[arg(long, value_parser = parse_mode, default_value = "conll2009")]
        mode: TaskMode,
        /// Head column the pruning walks.
        #[arg(long, value_enum, default_value = "gold")]
        source: Source,
    },
    /// Train and compare model variants on the same data and seed.
    Ablate {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated: full, no-pos, no-lemma, no-indicator, sba, dba, with-pruning(k).
        #[arg(long)]
        variants: String,
    },
}

fn parse_mode(s: &str) -> Result<TaskMode, String> {
    s.parse()
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train { config, seed } => commands::cmd_train(&config, seed),
        Command::Predict {
            model,
            input,
            output,
            mode,
        } => commands::cmd_predict(&model, &input, &output, mode),
        Command::Evaluate { gold, pred, mode, tsv } => commands::cmd_evaluate(&gold, &pred, mode, tsv),
        Command::Stats {
            input,
            k_max,
            mode,
            source,
        } => {
            let source = match source {
                Source::Gold => HeadSource::Gold,
                Source::Predicted => HeadSource::Predicted,
            };
            commands::cmd_stats(&input, k_max, mode, source)
        }
        Command::Ablate { config, variants } => commands::cmd_ablate(&config, &variants),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

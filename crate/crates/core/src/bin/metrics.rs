use clap::Parser;
use ipredict::cli::{run_metrics, MetricsCommand};

/// Corpus-level BLEU, meteor_lite and CharacTER.
#[derive(Parser)]
#[command(name = "metrics", version)]
struct Cli {
    #[command(subcommand)]
    command: MetricsCommand,
}

fn main() -> anyhow::Result<()> {
    run_metrics(&Cli::parse().command)
}

//! Command-line plumbing shared by the `ipredict` and `metrics` binaries.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::metrics::{bleu, corpus_character_ter, corpus_meteor_lite};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricName {
    Bleu,
    Meteor,
    Character,
    All,
}

#[derive(Debug, Subcommand)]
pub enum MetricsCommand {
    /// Score a hypothesis file against one or more reference files.
    Score(ScoreArgs),
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// One hypothesis per line.
    #[arg(long)]
    pub hyp: PathBuf,
    /// Reference files, comma-separated; line-aligned with the hypotheses.
    #[arg(long = "ref", value_delimiter = ',', required = true)]
    pub refs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = MetricName::All)]
    pub metric: MetricName,
}

fn read_lines(path: &Path) -> anyhow::Result<Vec<String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text.lines().map(str::to_owned).collect())
}

/// Metric values as a JSON object keyed by metric name.
pub fn score(args: &ScoreArgs) -> anyhow::Result<Value> {
    let hyps = read_lines(&args.hyp)?;
    let columns = args.refs.iter().map(|p| read_lines(p)).collect::<anyhow::Result<Vec<_>>>()?;
    for (col, path) in columns.iter().zip(&args.refs) {
        if col.len() != hyps.len() {
            bail!("{}: {} lines vs {} hypotheses", path.display(), col.len(), hyps.len());
        }
    }
    let refs: Vec<Vec<String>> = (0..hyps.len())
        .map(|i| columns.iter().map(|c| c[i].clone()).collect())
        .collect();
    let mut out = Map::new();
    let all = args.metric == MetricName::All;
    if all || args.metric == MetricName::Bleu {
        out.insert("bleu".into(), json!(bleu(&hyps, &refs)?));
    }
    if all || args.metric == MetricName::Meteor {
        out.insert("meteor_lite".into(), json!(corpus_meteor_lite(&hyps, &refs)?));
    }
    if all || args.metric == MetricName::Character {
        out.insert("character_ter".into(), json!(corpus_character_ter(&hyps, &refs)?));
    }
    out.insert("sentences".into(), json!(hyps.len()));
    Ok(Value::Object(out))
}

pub fn run_metrics(cmd: &MetricsCommand) -> anyhow::Result<()> {
    match cmd {
        MetricsCommand::Score(args) => {
            println!("{}", serde_json::to_string_pretty(&score(args)?)?);
            Ok(())
        }
    }
}

pub fn init_logging() {
    let filter = tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into());
    let _ = tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).try_init();
}

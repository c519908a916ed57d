use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use ipredict::cli::{init_logging, run_metrics, MetricsCommand};
use ipredict::corpus::{validate, CorpusDir, ExperimentConfig, ScorerKind};
use ipredict::decoder::LengthNormalization;
use ipredict::seqcore::Vocabulary;
use ipredict::server::{serve, AppState, ServerConfig};
use ipredict::simulator::{run_experiment, ReferencePolicy};

#[derive(Parser)]
#[command(name = "ipredict", version, about = "Interactive-predictive sequence prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the simulated user over a corpus and write an effort report.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        max_interactions: Option<usize>,
        #[arg(long, value_parser = parse_policy)]
        reference_policy: Option<ReferencePolicy>,
        /// Do not count the final acceptance as a mouse action.
        #[arg(long)]
        no_acceptance_click: bool,
        /// Include wall-clock latency statistics (the report is then not reproducible).
        #[arg(long)]
        record_latency: bool,
        /// Report path; stdout when absent.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Serve the session API.
    Serve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        port: Option<u16>,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        ui_dir: Option<PathBuf>,
        #[arg(long)]
        session_ttl_secs: Option<u64>,
    },
    /// Out-of-vocabulary rates and length histograms of a corpus.
    Validate {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        source_vocab: Option<PathBuf>,
    },
    /// Score plain-text files.
    Metrics {
        #[command(subcommand)]
        command: MetricsCommand,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    corpus: PathBuf,
    /// JSON experiment file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scorer: Option<ScorerKind>,
    #[arg(long)]
    beam: Option<usize>,
    #[arg(long)]
    max_length: Option<usize>,
    /// Rank hypotheses by log-probability per token.
    #[arg(long)]
    normalize: bool,
    #[arg(long)]
    ngram_order: Option<usize>,
    #[arg(long)]
    smoothing: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
}

fn parse_policy(s: &str) -> Result<ReferencePolicy, String> {
    match s {
        "first" => Ok(ReferencePolicy::First),
        "min-initial-character-ter" => Ok(ReferencePolicy::MinInitialCharacterTer),
        other => Err(format!("unknown policy {other:?} (first | min-initial-character-ter)")),
    }
}

impl Common {
    fn config(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(k) = self.scorer {
            cfg.scorer.kind = k;
        }
        if let Some(b) = self.beam {
            cfg.search.beam_size = b;
        }
        if let Some(m) = self.max_length {
            cfg.search.max_length = m;
        }
        if self.normalize {
            cfg.search.length_normalization = LengthNormalization::DivideByLength;
        }
        if let Some(o) = self.ngram_order {
            cfg.scorer.ngram.order = o;
        }
        if let Some(a) = self.smoothing {
            cfg.scorer.ngram.smoothing = a;
        }
        if let Some(l) = self.lambda {
            cfg.scorer.ngram.lambda = l;
        }
        cfg.search.validate()?;
        Ok(cfg)
    }
}

fn open(corpus: &Path) -> anyhow::Result<CorpusDir> {
    CorpusDir::open(corpus).with_context(|| format!("loading corpus {}", corpus.display()))
}

fn main() -> anyhow::Result<()> {
    init_logging();
    match Cli::parse().command {
        Command::Simulate {
            common,
            max_interactions,
            reference_policy,
            no_acceptance_click,
            record_latency,
            report,
        } => {
            let mut cfg = common.config()?;
            if max_interactions.is_some() {
                cfg.simulation.max_interactions = max_interactions;
            }
            if let Some(p) = reference_policy {
                cfg.simulation.reference_policy = p;
            }
            if no_acceptance_click {
                cfg.ksmr.count_acceptance = false;
            }
            cfg.simulation.record_latency |= record_latency;
            let dir = open(&common.corpus)?;
            let scorer = dir.build_scorer(&cfg.scorer)?;
            tracing::info!(samples = dir.dataset.len(), "simulating");
            let out = run_experiment(&dir.dataset, &scorer, &cfg.simulation_config())?;
            let text = serde_json::to_string_pretty(&out)? + "\n";
            match report {
                Some(p) => std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{text}"),
            }
            tracing::info!(
                bleu = out.effort.bleu,
                character_ter = out.effort.character_ter,
                ksmr = out.effort.ksmr,
                converged = out.converged,
                capped = out.capped,
                "done"
            );
            Ok(())
        }
        Command::Serve {
            common,
            port,
            host,
            ui_dir,
            session_ttl_secs,
        } => {
            let cfg = common.config()?;
            let dir = open(&common.corpus)?;
            let scorer = dir.build_scorer(&cfg.scorer)?;
            let server_cfg = ServerConfig {
                search: cfg.search.clone(),
                ksmr: cfg.ksmr,
                session_ttl: Duration::from_secs(session_ttl_secs.unwrap_or(cfg.server.session_ttl_secs)),
                ui_dir: ui_dir.or(cfg.server.ui_dir.clone()),
            };
            let state = Arc::new(AppState::new(scorer, server_cfg).with_samples(&dir.dataset));
            let addr: SocketAddr = format!("{host}:{}", port.unwrap_or(cfg.server.port))
                .parse()
                .context("bad --host/--port")?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(addr).await?;
                tracing::info!(addr = %listener.local_addr()?, "listening");
                serve(listener, state, async {
                    let _ = tokio::signal::ctrl_c().await;
                })
                .await
            })?;
            Ok(())
        }
        Command::Validate { corpus, source_vocab } => {
            let dir = open(&corpus)?;
            let sv = source_vocab.map(Vocabulary::load).transpose()?;
            let report = validate(&dir.dataset, &dir.vocab, sv.as_ref());
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
        Command::Metrics { command } => run_metrics(&command),
    }
}

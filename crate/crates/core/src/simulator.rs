//! Simulated user and experiment runner.
//!
//! The user fixes the leftmost wrong character of each hypothesis until the
//! output equals the target reference. Static quality is measured on the
//! initial unconstrained predictions.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::corpus::Dataset;
use crate::decoder::SearchConfig;
use crate::metrics::{
    bleu, char_edits, character_ter, corpus_character_ter, corpus_meteor_lite, EffortReport, InteractionTrace,
    KsmrConvention, MetricError,
};
use crate::scorers::{Scorer, ScorerError};
use crate::seqcore::{FeedbackSignal, SourceContext};
use crate::session::{Session, SessionError};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferencePolicy {
    /// The first reference of each sample.
    #[default]
    First,
    /// The reference closest to the initial prediction by CharacTER.
    MinInitialCharacterTer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    pub search: SearchConfig,
    /// Interaction cap; `None` means twice the reference length.
    pub max_interactions: Option<usize>,
    pub reference_policy: ReferencePolicy,
    pub ksmr: KsmrConvention,
    /// Wall-clock latencies make reports differ run to run; off by default.
    pub record_latency: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            search: SearchConfig::default(),
            max_interactions: None,
            reference_policy: ReferencePolicy::First,
            ksmr: KsmrConvention::default(),
            record_latency: false,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), SimulationError> {
        if self.max_interactions == Some(0) {
            return Err(SimulationError::InvalidConfig("max_interactions must be at least 1".into()));
        }
        self.search
            .validate()
            .map_err(|e| SimulationError::InvalidConfig(e.to_string()))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SimulationError {
    #[error("reference is empty")]
    EmptyReference,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("scorer cannot handle samples: {}", .ids.join(", "))]
    Mismatch { ids: Vec<String> },
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// The correction the simulated user makes: the reference character at the
/// first position where the hypothesis differs, or end-of-text when the
/// reference is a proper prefix of the hypothesis. `None` when they match.
pub fn leftmost_feedback(hypothesis: &str, reference: &str) -> Option<FeedbackSignal> {
    let mut h = hypothesis.chars();
    let mut r = reference.chars();
    let mut pos = 0;
    loop {
        match (h.next(), r.next()) {
            (None, None) => return None,
            (Some(_), None) => return Some(FeedbackSignal::end_of_text(pos)),
            (None, Some(rc)) => return Some(FeedbackSignal::char(pos, rc)),
            (Some(hc), Some(rc)) if hc != rc => return Some(FeedbackSignal::char(pos, rc)),
            _ => pos += 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulatedSession {
    pub initial_hypothesis: String,
    /// Hypothesis after each correction.
    pub hypotheses: Vec<String>,
    pub trace: InteractionTrace,
    pub latencies: Vec<Duration>,
}

/// Runs the correction loop against one reference. A converged trace is
/// accepted with the reference as final prediction; a capped one is flagged
/// and left unaccepted.
pub fn simulate_session<S: Scorer + ?Sized>(
    scorer: &S,
    source: &SourceContext,
    reference: &str,
    cfg: &SimulationConfig,
) -> Result<SimulatedSession, SimulationError> {
    let session = Session::start(scorer, source.clone(), cfg.search.clone())?;
    continue_session(scorer, session, reference, cfg)
}

fn continue_session<S: Scorer + ?Sized>(
    scorer: &S,
    mut session: Session,
    reference: &str,
    cfg: &SimulationConfig,
) -> Result<SimulatedSession, SimulationError> {
    if reference.is_empty() {
        return Err(SimulationError::EmptyReference);
    }
    let cap = cfg
        .max_interactions
        .unwrap_or(2 * reference.chars().count());
    let initial_hypothesis = session.hypothesis().to_owned();
    let mut hypotheses = Vec::new();
    let mut latencies = Vec::new();
    loop {
        let Some(fb) = leftmost_feedback(session.hypothesis(), reference) else {
            session.accept_as(reference);
            break;
        };
        if session.trace().keystrokes() >= cap {
            session.mark_capped();
            break;
        }
        let out = session.feedback(scorer, fb)?;
        latencies.push(out.latency);
        hypotheses.push(session.hypothesis().to_owned());
    }
    Ok(SimulatedSession {
        initial_hypothesis,
        hypotheses,
        trace: session.trace().clone(),
        latencies,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub calls: usize,
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p90_ms: f64,
    pub p99_ms: f64,
    pub max_ms: f64,
}

impl LatencyStats {
    /// Nearest-rank percentiles. `None` for no samples.
    pub fn from_durations(samples: &[Duration]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let mut ms: Vec<f64> = samples.iter().map(|d| d.as_secs_f64() * 1e3).collect();
        ms.sort_by(f64::total_cmp);
        let rank = |p: f64| ms[((p * ms.len() as f64).ceil() as usize).clamp(1, ms.len()) - 1];
        Some(Self {
            calls: ms.len(),
            mean_ms: ms.iter().sum::<f64>() / ms.len() as f64,
            p50_ms: rank(0.50),
            p90_ms: rank(0.90),
            p99_ms: rank(0.99),
            max_ms: ms[ms.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub id: String,
    pub reference_index: usize,
    pub initial_hypothesis: String,
    /// Character edit operations turning the initial prediction into the
    /// target reference.
    pub static_edit_operations: usize,
    pub reference_characters: usize,
    pub keystrokes: usize,
    pub mouse_actions: usize,
    pub ksmr: Option<f64>,
    pub converged: bool,
    pub capped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub effort: EffortReport,
    pub static_edit_operations: usize,
    pub reference_characters: usize,
    pub converged: usize,
    pub capped: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub latency: Option<LatencyStats>,
    pub samples: Vec<SampleReport>,
}

/// Static pass plus one simulated session per sample, in dataset order.
pub fn run_experiment<S: Scorer + ?Sized>(
    dataset: &Dataset,
    scorer: &S,
    cfg: &SimulationConfig,
) -> Result<ExperimentReport, SimulationError> {
    cfg.validate()?;
    if dataset.samples.is_empty() {
        return Err(SimulationError::EmptyDataset);
    }
    let ids: Vec<String> = dataset
        .samples
        .iter()
        .filter(|s| {
            matches!(
                scorer.encode(&s.source),
                Err(ScorerError::UnknownSource(_) | ScorerError::UnsupportedModality(_))
            )
        })
        .map(|s| s.id.clone())
        .collect();
    if !ids.is_empty() {
        return Err(SimulationError::Mismatch { ids });
    }

    let mut initial = Vec::with_capacity(dataset.samples.len());
    let mut reports = Vec::with_capacity(dataset.samples.len());
    let mut latencies = Vec::new();
    let mut ksmr_sum = 0.0;
    let mut effort = EffortReport {
        samples: dataset.samples.len(),
        ..EffortReport::default()
    };
    for sample in &dataset.samples {
        let session = Session::start(scorer, sample.source.clone(), cfg.search.clone())?;
        let hyp = session.hypothesis().to_owned();
        let reference_index = match cfg.reference_policy {
            ReferencePolicy::First => 0,
            ReferencePolicy::MinInitialCharacterTer => sample
                .references
                .iter()
                .enumerate()
                .min_by(|a, b| character_ter(&hyp, a.1).total_cmp(&character_ter(&hyp, b.1)))
                .map_or(0, |(i, _)| i),
        };
        let reference = &sample.references[reference_index];
        let sim = continue_session(scorer, session, reference, cfg)?;
        latencies.extend(sim.latencies);

        let ksmr = crate::metrics::ksmr(&sim.trace, cfg.ksmr).ok();
        let report = SampleReport {
            id: sample.id.clone(),
            reference_index,
            static_edit_operations: char_edits(&hyp, reference),
            reference_characters: reference.chars().count(),
            keystrokes: sim.trace.keystrokes(),
            mouse_actions: sim.trace.mouse_actions(cfg.ksmr),
            ksmr,
            converged: sim.trace.accepted,
            capped: sim.trace.capped,
            initial_hypothesis: hyp.clone(),
        };
        effort.keystrokes += report.keystrokes;
        effort.mouse_actions += report.mouse_actions;
        if let Some(k) = ksmr {
            ksmr_sum += k;
            effort.characters += report.reference_characters;
        }
        initial.push(hyp);
        reports.push(report);
    }

    let references: Vec<Vec<String>> = dataset.samples.iter().map(|s| s.references.clone()).collect();
    effort.bleu = bleu(&initial, &references)?;
    effort.meteor_lite = corpus_meteor_lite(&initial, &references)?;
    effort.character_ter = corpus_character_ter(&initial, &references)?;
    let converged = reports.iter().filter(|r| r.converged).count();
    effort.ksmr = if converged > 0 { ksmr_sum / converged as f64 } else { 0.0 };

    Ok(ExperimentReport {
        effort,
        static_edit_operations: reports.iter().map(|r| r.static_edit_operations).sum(),
        reference_characters: reports.iter().map(|r| r.reference_characters).sum(),
        converged,
        capped: reports.iter().filter(|r| r.capped).count(),
        latency: if cfg.record_latency {
            LatencyStats::from_durations(&latencies)
        } else {
            None
        },
        samples: reports,
    })
}

//! Prediction-quality metrics (BLEU, meteor_lite) and effort metrics
//! (CharacTER, KSMR). Every rate is on the 0-100 scale.

use serde::{Deserialize, Serialize};

mod bleu;
mod edit;
mod ksmr;
mod meteor;

pub use bleu::{bleu, bleu_with, BleuOptions, BleuStats};
pub use edit::{char_edits, character_ter, character_ter_multi, corpus_character_ter, damerau_levenshtein};
pub use ksmr::{ksmr, InteractionTrace, KsmrConvention, TraceEvent};
pub use meteor::{corpus_meteor_lite, meteor_lite, Alignment};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("{hypotheses} hypotheses but {references} reference sets")]
    LengthMismatch { hypotheses: usize, references: usize },
    #[error("sample {index} has no reference")]
    NoReferences { index: usize },
    #[error("trace has not been accepted")]
    NotAccepted,
    #[error("final prediction is empty")]
    EmptyPrediction,
}

/// Aggregated static and interactive figures for one dataset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EffortReport {
    pub bleu: f64,
    pub meteor_lite: f64,
    /// Mean sentence CharacTER; may exceed 100 when hypotheses are much
    /// shorter than their references.
    pub character_ter: f64,
    /// Mean per-sample KSMR over accepted sessions.
    pub ksmr: f64,
    pub samples: usize,
    pub keystrokes: usize,
    pub mouse_actions: usize,
    /// Characters of the accepted final predictions.
    pub characters: usize,
}

pub(crate) fn words(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

pub(crate) fn check_corpus<H, R>(hypotheses: &[H], references: &[R]) -> Result<(), MetricError>
where
    R: AsRef<[String]>,
{
    if hypotheses.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    if hypotheses.len() != references.len() {
        return Err(MetricError::LengthMismatch {
            hypotheses: hypotheses.len(),
            references: references.len(),
        });
    }
    if let Some(index) = references.iter().position(|r| r.as_ref().is_empty()) {
        return Err(MetricError::NoReferences { index });
    }
    Ok(())
}

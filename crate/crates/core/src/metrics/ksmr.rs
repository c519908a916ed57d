use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::seqcore::{Correction, FeedbackSignal};

/// Mouse-action accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct KsmrConvention {
    /// Count the final acceptance click as a mouse action.
    pub count_acceptance: bool,
}

impl Default for KsmrConvention {
    fn default() -> Self {
        Self { count_acceptance: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub position: usize,
    pub correction: Correction,
    /// Typed right after the previous correction, so no caret move was needed.
    pub contiguous: bool,
}

/// The user actions of one interactive session.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionTrace {
    pub events: Vec<TraceEvent>,
    pub final_prediction: Option<String>,
    pub accepted: bool,
    /// The session hit its interaction cap without converging.
    #[serde(default)]
    pub capped: bool,
}

impl InteractionTrace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a correction. A character typed at the position following the
    /// previous correction is contiguous; an end-of-text event always needs
    /// the caret placed and never is.
    pub fn record(&mut self, feedback: &FeedbackSignal) -> TraceEvent {
        let contiguous = matches!(feedback.correction, Correction::Char(_))
            && self
                .events
                .last()
                .is_some_and(|prev| prev.position + 1 == feedback.position);
        let event = TraceEvent {
            position: feedback.position,
            correction: feedback.correction,
            contiguous,
        };
        self.events.push(event);
        event
    }

    pub fn accept(&mut self, final_prediction: impl Into<String>) {
        self.final_prediction = Some(final_prediction.into());
        self.accepted = true;
    }

    pub fn keystrokes(&self) -> usize {
        self.events.len()
    }

    /// Non-contiguous corrections, plus the acceptance once accepted.
    pub fn mouse_actions(&self, conv: KsmrConvention) -> usize {
        let moves = self.events.iter().filter(|e| !e.contiguous).count();
        moves + usize::from(self.accepted && conv.count_acceptance)
    }
}

/// `100 * (keystrokes + mouse actions) / characters of the final prediction`.
pub fn ksmr(trace: &InteractionTrace, conv: KsmrConvention) -> Result<f64, MetricError> {
    if !trace.accepted {
        return Err(MetricError::NotAccepted);
    }
    let chars = trace.final_prediction.as_deref().map_or(0, |s| s.chars().count());
    if chars == 0 {
        return Err(MetricError::EmptyPrediction);
    }
    let effort = trace.keystrokes() + trace.mouse_actions(conv);
    Ok(100.0 * effort as f64 / chars as f64)
}

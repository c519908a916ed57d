//! One interactive correction loop: the state shared by the HTTP service,
//! the simulated user and the C interface.

use std::time::{Duration, Instant};

use crate::decoder::{beam_search, constrained_search, DecodeError, Hypothesis, SearchConfig};
use crate::metrics::{ksmr, InteractionTrace, KsmrConvention, MetricError, TraceEvent};
use crate::scorers::Scorer;
use crate::seqcore::{split_prefix, FeedbackSignal, PrefixConstraint, PrefixError, SourceContext};

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error(transparent)]
    Prefix(#[from] PrefixError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("session already accepted")]
    Accepted,
}

#[derive(Debug, Clone)]
pub struct FeedbackOutcome {
    pub event: TraceEvent,
    pub latency: Duration,
}

#[derive(Debug, Clone)]
pub struct Session {
    source: SourceContext,
    search: SearchConfig,
    hypothesis: Hypothesis,
    text: String,
    constraint: PrefixConstraint,
    trace: InteractionTrace,
}

impl Session {
    /// Decodes the initial unconstrained prediction.
    pub fn start<S: Scorer + ?Sized>(
        scorer: &S,
        source: SourceContext,
        search: SearchConfig,
    ) -> Result<Self, SessionError> {
        let hypothesis = beam_search(scorer, &source, &search)?;
        let text = hypothesis.render(scorer.vocab()).map_err(DecodeError::from)?;
        Ok(Self {
            source,
            search,
            hypothesis,
            text,
            constraint: PrefixConstraint::empty(),
            trace: InteractionTrace::new(),
        })
    }

    pub fn source(&self) -> &SourceContext {
        &self.source
    }

    pub fn hypothesis(&self) -> &str {
        &self.text
    }

    pub fn tokens(&self) -> &Hypothesis {
        &self.hypothesis
    }

    pub fn constraint(&self) -> &PrefixConstraint {
        &self.constraint
    }

    /// Characters of the current hypothesis the user has validated.
    pub fn validated_prefix_length(&self) -> usize {
        self.constraint.char_length()
    }

    pub fn trace(&self) -> &InteractionTrace {
        &self.trace
    }

    pub fn is_accepted(&self) -> bool {
        self.trace.accepted
    }

    /// Applies one correction and re-decodes. On error the session is left
    /// unchanged.
    pub fn feedback<S: Scorer + ?Sized>(
        &mut self,
        scorer: &S,
        feedback: FeedbackSignal,
    ) -> Result<FeedbackOutcome, SessionError> {
        if self.trace.accepted {
            return Err(SessionError::Accepted);
        }
        let vocab = scorer.vocab();
        let constraint = split_prefix(&self.text, &feedback, vocab)?;
        let started = Instant::now();
        let hypothesis = constrained_search(scorer, &self.source, &constraint, &self.search)?;
        let latency = started.elapsed();
        let text = hypothesis.render(vocab).map_err(DecodeError::from)?;
        debug_assert!(constraint.admits(&text));

        self.hypothesis = hypothesis;
        self.text = text;
        self.constraint = constraint;
        let event = self.trace.record(&feedback);
        Ok(FeedbackOutcome { event, latency })
    }

    /// Closes the trace with the current hypothesis. Repeated calls are no-ops.
    pub fn accept(&mut self) -> &InteractionTrace {
        if !self.trace.accepted {
            self.trace.accept(self.text.clone());
        }
        &self.trace
    }

    /// Accepts `final_prediction` instead of the current hypothesis; used by
    /// the simulated user, whose target is a reference.
    pub(crate) fn accept_as(&mut self, final_prediction: &str) {
        if !self.trace.accepted {
            self.trace.accept(final_prediction);
        }
    }

    pub(crate) fn mark_capped(&mut self) {
        self.trace.capped = true;
    }

    pub fn ksmr(&self, conv: KsmrConvention) -> Result<f64, SessionError> {
        Ok(ksmr(&self.trace, conv)?)
    }
}

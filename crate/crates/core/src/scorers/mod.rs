//! Conditional sequence models `p(y | x)` behind a uniform
//! state/distribution interface.
//!
//! Implementors supply [`Scorer::encode`] (source → private context) and
//! [`Scorer::log_probs`] (context + consumed target tokens → next-token
//! log-probabilities). Everything the decoder needs is built on those two.

use std::any::Any;
use std::fmt;
use std::sync::Arc;

use crate::seqcore::{Modality, SourceContext, TokenId, VocabError, Vocabulary};

mod nbest;
mod ngram;
mod random;
mod uniform;

pub use nbest::{NBestList, NBestScorer, DEFAULT_EPSILON};
pub use ngram::{NgramConfig, NgramScorer};
pub use random::RandomScorer;
pub use uniform::UniformScorer;

/// Scorer-private encoding of a source object.
pub type Encoded = Arc<dyn Any + Send + Sync>;

#[derive(Debug, thiserror::Error)]
pub enum ScorerError {
    #[error("scorer does not support {0} sources")]
    UnsupportedModality(Modality),
    #[error("unknown source {0:?}")]
    UnknownSource(String),
    #[error("decoder state already terminated")]
    Terminated,
    #[error("token id {0} is not in the vocabulary")]
    InvalidToken(TokenId),
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("n-best line {line}: {message}")]
    NBestParse { line: usize, message: String },
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Vocab(#[from] VocabError),
}

/// Position of a decoder inside one target sequence.
#[derive(Clone)]
pub struct DecoderState {
    encoded: Encoded,
    history: Vec<TokenId>,
    log_prob: f64,
    terminated: bool,
}

impl DecoderState {
    pub fn history(&self) -> &[TokenId] {
        &self.history
    }

    /// Cumulative log-probability of the consumed tokens.
    pub fn log_prob(&self) -> f64 {
        self.log_prob
    }

    pub fn is_terminated(&self) -> bool {
        self.terminated
    }

    pub fn encoded(&self) -> &Encoded {
        &self.encoded
    }

    /// Child state after `token`, whose score `token_log_prob` was already
    /// read from this state's distribution.
    pub(crate) fn extend(&self, token: TokenId, token_log_prob: f64, eos: TokenId) -> Self {
        let mut history = Vec::with_capacity(self.history.len() + 1);
        history.extend_from_slice(&self.history);
        history.push(token);
        Self {
            encoded: Arc::clone(&self.encoded),
            history,
            log_prob: self.log_prob + token_log_prob,
            terminated: token == eos,
        }
    }
}

impl fmt::Debug for DecoderState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DecoderState")
            .field("history", &self.history)
            .field("log_prob", &self.log_prob)
            .field("terminated", &self.terminated)
            .finish_non_exhaustive()
    }
}

pub trait Scorer: Send + Sync {
    fn vocab(&self) -> &Vocabulary;

    /// Encodes the source once per decoding run.
    fn encode(&self, source: &SourceContext) -> Result<Encoded, ScorerError>;

    /// Log-probabilities over the whole vocabulary (length `vocab().len()`,
    /// exponentials sum to one) for the token after `history`.
    fn log_probs(&self, encoded: &Encoded, history: &[TokenId]) -> Result<Vec<f64>, ScorerError>;

    fn init_state(&self, source: &SourceContext) -> Result<DecoderState, ScorerError> {
        Ok(DecoderState {
            encoded: self.encode(source)?,
            history: Vec::new(),
            log_prob: 0.0,
            terminated: false,
        })
    }

    fn next_distribution(&self, state: &DecoderState) -> Result<Vec<f64>, ScorerError> {
        if state.terminated {
            return Err(ScorerError::Terminated);
        }
        self.log_probs(&state.encoded, &state.history)
    }

    fn advance(&self, state: &DecoderState, token: TokenId) -> Result<DecoderState, ScorerError> {
        if !self.vocab().contains(token) {
            return Err(ScorerError::InvalidToken(token));
        }
        let dist = self.next_distribution(state)?;
        Ok(state.extend(token, dist[token.index()], self.vocab().eos()))
    }
}

impl<S: Scorer + ?Sized> Scorer for Arc<S> {
    fn vocab(&self) -> &Vocabulary {
        (**self).vocab()
    }

    fn encode(&self, source: &SourceContext) -> Result<Encoded, ScorerError> {
        (**self).encode(source)
    }

    fn log_probs(&self, encoded: &Encoded, history: &[TokenId]) -> Result<Vec<f64>, ScorerError> {
        (**self).log_probs(encoded, history)
    }
}

/// Number of ids a scorer may emit: everything except begin-of-sequence.
pub(crate) fn emittable_count(vocab: &Vocabulary) -> usize {
    vocab.len() - usize::from(vocab.bos().is_some())
}

/// Fills a log-probability vector where every emittable id has probability
/// `base + extra[id]`, computing logarithms only for the touched ids.
pub(crate) struct SparseDistribution {
    base: f64,
    extra: Vec<f64>,
    touched: Vec<usize>,
}

impl SparseDistribution {
    pub(crate) fn new(len: usize, base: f64) -> Self {
        Self {
            base,
            extra: vec![0.0; len],
            touched: Vec::new(),
        }
    }

    #[inline]
    pub(crate) fn add(&mut self, id: TokenId, mass: f64) {
        let slot = &mut self.extra[id.index()];
        if *slot == 0.0 {
            self.touched.push(id.index());
        }
        *slot += mass;
    }

    pub(crate) fn into_log_probs(self, vocab: &Vocabulary) -> Vec<f64> {
        let mut out = vec![self.base.ln(); self.extra.len()];
        for &i in &self.touched {
            out[i] = (self.base + self.extra[i]).ln();
        }
        if let Some(bos) = vocab.bos() {
            out[bos.index()] = f64::NEG_INFINITY;
        }
        out
    }
}

pub(crate) fn source_words(source: &SourceContext) -> Result<Vec<&str>, ScorerError> {
    match source {
        SourceContext::Text { text, .. } => Ok(text.split_whitespace().collect()),
        other => Err(ScorerError::UnsupportedModality(other.modality())),
    }
}

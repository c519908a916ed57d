//! Lookup scorer over precomputed candidate lists.
//!
//! For a consumed prefix `h`, the candidates that extend `h` vote for their
//! next token (end-of-sequence when the candidate ends at `h`) with their
//! softmax-normalized weight. Every emittable id also receives `ε`, and the
//! result is renormalized, so constrained search never meets an all-`-∞`
//! distribution. Once `h` leaves every candidate the distribution is uniform.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use super::{emittable_count, Encoded, Scorer, ScorerError, SparseDistribution};
use crate::seqcore::{SourceContext, TokenId, Vocabulary};

pub const DEFAULT_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Default)]
pub struct NBestList {
    candidates: Vec<(Vec<TokenId>, f64)>,
    weights: Vec<f64>,
}

impl NBestList {
    fn push(&mut self, tokens: Vec<TokenId>, log_prob: f64) {
        self.candidates.push((tokens, log_prob));
        let max = self
            .candidates
            .iter()
            .map(|(_, lp)| *lp)
            .fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = self.candidates.iter().map(|(_, lp)| (lp - max).exp()).collect();
        let total: f64 = exp.iter().sum();
        self.weights = exp.into_iter().map(|e| e / total).collect();
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// Candidates in insertion order with their log-probabilities.
    pub fn candidates(&self) -> impl Iterator<Item = (&[TokenId], f64)> {
        self.candidates.iter().map(|(t, lp)| (t.as_slice(), *lp))
    }
}

#[derive(Debug, Clone)]
pub struct NBestScorer {
    vocab: Arc<Vocabulary>,
    lists: HashMap<String, Arc<NBestList>>,
    epsilon: f64,
}

impl NBestScorer {
    pub fn new(vocab: Arc<Vocabulary>) -> Self {
        Self::with_epsilon(vocab, DEFAULT_EPSILON)
    }

    pub fn with_epsilon(vocab: Arc<Vocabulary>, epsilon: f64) -> Self {
        assert!(epsilon > 0.0, "epsilon must be positive");
        Self {
            vocab,
            lists: HashMap::new(),
            epsilon,
        }
    }

    /// Adds a candidate for `source_id`. Every word must be in the vocabulary.
    pub fn add(&mut self, source_id: &str, candidate: &str, log_prob: f64) -> Result<(), ScorerError> {
        if !log_prob.is_finite() {
            return Err(ScorerError::InvalidConfig(format!(
                "candidate log-probability {log_prob} is not finite"
            )));
        }
        let seq = self.vocab.tokenize(candidate.trim());
        if let Some(pos) = (0..seq.len()).find(|&i| seq.literal(i).is_some()) {
            return Err(ScorerError::InvalidConfig(format!(
                "candidate word {:?} is not in the vocabulary",
                seq.literal(pos).unwrap_or_default()
            )));
        }
        let list = self.lists.entry(source_id.to_owned()).or_default();
        Arc::make_mut(list).push(seq.ids().to_vec(), log_prob);
        Ok(())
    }

    /// Parses `source_id<TAB>logprob<TAB>candidate text` lines.
    pub fn parse(vocab: Arc<Vocabulary>, text: &str) -> Result<Self, ScorerError> {
        let mut scorer = Self::new(vocab);
        for (n, line) in text.lines().enumerate() {
            let line_no = n + 1;
            if line.trim().is_empty() {
                continue;
            }
            let err = |message: String| ScorerError::NBestParse {
                line: line_no,
                message,
            };
            let mut fields = line.splitn(3, '\t');
            let (Some(id), Some(lp), Some(candidate)) = (fields.next(), fields.next(), fields.next()) else {
                return Err(err("expected three tab-separated fields".into()));
            };
            let log_prob: f64 = lp
                .trim()
                .parse()
                .map_err(|_| err(format!("bad log-probability {lp:?}")))?;
            scorer.add(id, candidate, log_prob).map_err(|e| err(e.to_string()))?;
        }
        Ok(scorer)
    }

    pub fn load(vocab: Arc<Vocabulary>, path: impl AsRef<Path>) -> Result<Self, ScorerError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScorerError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(vocab, &text)
    }

    pub fn list(&self, source_id: &str) -> Option<&NBestList> {
        self.lists.get(source_id).map(Arc::as_ref)
    }

    pub fn source_ids(&self) -> impl Iterator<Item = &str> {
        self.lists.keys().map(String::as_str)
    }

    pub fn set_epsilon(&mut self, epsilon: f64) -> Result<(), ScorerError> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(ScorerError::InvalidConfig(format!("epsilon must be positive, got {epsilon}")));
        }
        self.epsilon = epsilon;
        Ok(())
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

impl Scorer for NBestScorer {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn encode(&self, source: &SourceContext) -> Result<Encoded, ScorerError> {
        let key = source.lookup_key();
        let list = self
            .lists
            .get(key)
            .ok_or_else(|| ScorerError::UnknownSource(key.to_owned()))?;
        Ok(Arc::clone(list) as Encoded)
    }

    fn log_probs(&self, encoded: &Encoded, history: &[TokenId]) -> Result<Vec<f64>, ScorerError> {
        let list = encoded
            .downcast_ref::<NBestList>()
            .expect("state was encoded by this scorer");
        let v = emittable_count(&self.vocab) as f64;
        let eos = self.vocab.eos();

        let mut votes: Vec<(TokenId, f64)> = Vec::new();
        let mut matched = 0.0;
        for ((tokens, _), &w) in list.candidates.iter().zip(&list.weights) {
            if tokens.len() >= history.len() && tokens.starts_with(history) {
                let next = tokens.get(history.len()).copied().unwrap_or(eos);
                votes.push((next, w));
                matched += w;
            }
        }

        if votes.is_empty() || matched <= 0.0 {
            return Ok(SparseDistribution::new(self.vocab.len(), 1.0 / v).into_log_probs(&self.vocab));
        }
        let norm = 1.0 + self.epsilon * v;
        let mut dist = SparseDistribution::new(self.vocab.len(), self.epsilon / norm);
        for (token, w) in votes {
            dist.add(token, w / matched / norm);
        }
        Ok(dist.into_log_probs(&self.vocab))
    }
}

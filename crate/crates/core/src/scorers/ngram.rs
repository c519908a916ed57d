//! Interpolated n-gram target model mixed with a source-conditioned lexical
//! model, both with additive smoothing.
//!
//! ```text
//! p(w | x, h) = λ · lex(w | x) + (1 − λ) · Σ_k β_k · p_k(w | h)
//! p_k(w | h)  = (c(h_k, w) + α) / (c(h_k) + α·V)
//! lex(w | x)  = mean over source words s of (cooc(s, w) + α) / (cooc(s) + α·V)
//! ```
//!
//! `V` counts the ids the model can emit (all but begin-of-sequence). The
//! end-of-sequence token is counted as an ordinary event in both tables.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    emittable_count, source_words, Encoded, Scorer, ScorerError, SparseDistribution,
};
use crate::seqcore::{SourceContext, TokenId, Vocabulary};

// Padding before the first target token; never a real id.
const START: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NgramConfig {
    pub order: usize,
    /// Additive constant `α`.
    pub smoothing: f64,
    /// Weight `λ` of the lexical component.
    pub lambda: f64,
    /// Interpolation weights for orders `1..=order`; uniform when absent.
    pub order_weights: Option<Vec<f64>>,
}

impl Default for NgramConfig {
    fn default() -> Self {
        Self {
            order: 3,
            smoothing: 0.01,
            lambda: 0.3,
            order_weights: None,
        }
    }
}

impl NgramConfig {
    fn validate(&self) -> Result<Vec<f64>, ScorerError> {
        if self.order == 0 {
            return Err(ScorerError::InvalidConfig("order must be at least 1".into()));
        }
        if !(self.smoothing > 0.0 && self.smoothing.is_finite()) {
            return Err(ScorerError::InvalidConfig("smoothing must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(ScorerError::InvalidConfig("lambda must lie in [0, 1]".into()));
        }
        match &self.order_weights {
            None => Ok(vec![1.0 / self.order as f64; self.order]),
            Some(w) => {
                if w.len() != self.order || w.iter().any(|x| x.is_nan() || *x < 0.0) {
                    return Err(ScorerError::InvalidConfig(format!(
                        "need {} non-negative order weights",
                        self.order
                    )));
                }
                let total: f64 = w.iter().sum();
                if total <= 0.0 {
                    return Err(ScorerError::InvalidConfig("order weights sum to zero".into()));
                }
                Ok(w.iter().map(|x| x / total).collect())
            }
        }
    }
}

#[derive(Debug, Default, Clone)]
struct Continuations {
    total: u64,
    counts: HashMap<TokenId, u64>,
}

impl Continuations {
    fn add(&mut self, token: TokenId) {
        self.total += 1;
        *self.counts.entry(token).or_default() += 1;
    }
}

#[derive(Debug)]
struct EncodedSource {
    // lexical table index per source word occurrence; None for words unseen
    // in training, which contribute the uniform distribution
    words: Vec<Option<usize>>,
}

#[derive(Debug)]
pub struct NgramScorer {
    vocab: Arc<Vocabulary>,
    config: NgramConfig,
    weights: Vec<f64>,
    // tables[k] maps a context of k tokens to its continuations
    tables: Vec<HashMap<Box<[u32]>, Continuations>>,
    source_index: HashMap<String, usize>,
    lexical: Vec<Continuations>,
}

impl NgramScorer {
    /// Counts n-grams over the tokenized targets and source/target word
    /// co-occurrences over every sentence pair.
    pub fn train<I, S, T>(vocab: Arc<Vocabulary>, corpus: I, config: NgramConfig) -> Result<Self, ScorerError>
    where
        I: IntoIterator<Item = (S, T)>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let weights = config.validate()?;
        let order = config.order;
        let mut tables: Vec<HashMap<Box<[u32]>, Continuations>> = vec![HashMap::new(); order];
        let mut source_index = HashMap::new();
        let mut lexical: Vec<Continuations> = Vec::new();
        let mut pairs = 0usize;

        for (source, target) in corpus {
            pairs += 1;
            let mut target = vocab.tokenize(target.as_ref()).ids().to_vec();
            target.push(vocab.eos());

            let mut padded = vec![START; order - 1];
            padded.extend(target.iter().map(|t| t.0));
            for (i, &token) in target.iter().enumerate() {
                let end = i + order - 1;
                for (k, table) in tables.iter_mut().enumerate() {
                    let ctx: Box<[u32]> = padded[end - k..end].into();
                    table.entry(ctx).or_default().add(token);
                }
            }

            for word in source.as_ref().split_whitespace() {
                let next = lexical.len();
                let idx = *source_index.entry(word.to_owned()).or_insert(next);
                if idx == next {
                    lexical.push(Continuations::default());
                }
                for &token in &target {
                    lexical[idx].add(token);
                }
            }
        }
        if pairs == 0 {
            return Err(ScorerError::EmptyCorpus);
        }

        Ok(Self {
            vocab,
            config,
            weights,
            tables,
            source_index,
            lexical,
        })
    }

    pub fn config(&self) -> &NgramConfig {
        &self.config
    }

    /// Raw count of `token` after `context` (the last `k` tokens, `k < order`).
    /// Pass an empty context for unigram counts.
    pub fn count(&self, context: &[TokenId], token: TokenId) -> u64 {
        self.continuations(context)
            .and_then(|c| c.counts.get(&token).copied())
            .unwrap_or(0)
    }

    /// Total count of `context` as a history.
    pub fn context_total(&self, context: &[TokenId]) -> u64 {
        self.continuations(context).map_or(0, |c| c.total)
    }

    fn continuations(&self, context: &[TokenId]) -> Option<&Continuations> {
        let key: Vec<u32> = context.iter().map(|t| t.0).collect();
        self.tables.get(context.len())?.get(key.as_slice())
    }

    pub fn co_occurrence(&self, source_word: &str, token: TokenId) -> u64 {
        self.source_index
            .get(source_word)
            .and_then(|&i| self.lexical[i].counts.get(&token).copied())
            .unwrap_or(0)
    }
}

impl Scorer for NgramScorer {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn encode(&self, source: &SourceContext) -> Result<Encoded, ScorerError> {
        let words = source_words(source)?
            .into_iter()
            .map(|w| self.source_index.get(w).copied())
            .collect();
        Ok(Arc::new(EncodedSource { words }))
    }

    fn log_probs(&self, encoded: &Encoded, history: &[TokenId]) -> Result<Vec<f64>, ScorerError> {
        let source = encoded
            .downcast_ref::<EncodedSource>()
            .expect("state was encoded by this scorer");
        let alpha = self.config.smoothing;
        let lambda = self.config.lambda;
        let v = emittable_count(&self.vocab) as f64;

        // constant part shared by every emittable id, then sparse corrections
        let mut base = 0.0;
        let mut extras: Vec<(&Continuations, f64)> = Vec::new();

        if lambda > 0.0 {
            if source.words.is_empty() {
                base += lambda / v;
            } else {
                let share = lambda / source.words.len() as f64;
                for w in &source.words {
                    match w {
                        Some(i) => {
                            let c = &self.lexical[*i];
                            let denom = c.total as f64 + alpha * v;
                            base += share * alpha / denom;
                            extras.push((c, share / denom));
                        }
                        None => base += share / v,
                    }
                }
            }
        }

        if lambda < 1.0 {
            let order = self.config.order;
            let mut padded = vec![START; (order - 1).saturating_sub(history.len())];
            let keep = history.len().min(order - 1);
            padded.extend(history[history.len() - keep..].iter().map(|t| t.0));
            let end = padded.len();
            for (k, table) in self.tables.iter().enumerate() {
                let weight = (1.0 - lambda) * self.weights[k];
                match table.get(&padded[end - k..end]) {
                    Some(c) => {
                        let denom = c.total as f64 + alpha * v;
                        base += weight * alpha / denom;
                        extras.push((c, weight / denom));
                    }
                    None => base += weight / v,
                }
            }
        }

        let mut dist = SparseDistribution::new(self.vocab.len(), base);
        for (c, scale) in extras {
            for (&token, &n) in &c.counts {
                dist.add(token, scale * n as f64);
            }
        }
        Ok(dist.into_log_probs(&self.vocab))
    }
}

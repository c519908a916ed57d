use std::sync::Arc;

use super::{Encoded, Scorer, ScorerError};
use crate::seqcore::{SourceContext, TokenId, Vocabulary};

/// Every id, begin-of-sequence included, gets `1 / |V|`. Accepts any source.
#[derive(Debug, Clone)]
pub struct UniformScorer {
    vocab: Arc<Vocabulary>,
}

impl UniformScorer {
    pub fn new(vocab: Arc<Vocabulary>) -> Self {
        Self { vocab }
    }
}

impl Scorer for UniformScorer {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn encode(&self, _source: &SourceContext) -> Result<Encoded, ScorerError> {
        Ok(Arc::new(()))
    }

    fn log_probs(&self, _encoded: &Encoded, _history: &[TokenId]) -> Result<Vec<f64>, ScorerError> {
        let n = self.vocab.len();
        Ok(vec![(1.0 / n as f64).ln(); n])
    }
}

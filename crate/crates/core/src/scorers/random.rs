use std::hash::{DefaultHasher, Hash, Hasher};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Encoded, Scorer, ScorerError};
use crate::seqcore::{SourceContext, TokenId, Vocabulary};

/// Deterministic pseudo-random model: the distribution after a history is
/// drawn from a generator seeded by `(seed, source, history)`.
///
/// Used for randomized decoder properties and exhaustive-search checks.
/// Larger `sharpness` concentrates mass on fewer tokens.
#[derive(Debug, Clone)]
pub struct RandomScorer {
    vocab: Arc<Vocabulary>,
    seed: u64,
    sharpness: f64,
}

impl RandomScorer {
    pub fn new(vocab: Arc<Vocabulary>, seed: u64) -> Self {
        Self::with_sharpness(vocab, seed, 1.0)
    }

    pub fn with_sharpness(vocab: Arc<Vocabulary>, seed: u64, sharpness: f64) -> Self {
        Self {
            vocab,
            seed,
            sharpness,
        }
    }
}

impl Scorer for RandomScorer {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn encode(&self, source: &SourceContext) -> Result<Encoded, ScorerError> {
        let mut h = DefaultHasher::new();
        self.seed.hash(&mut h);
        source.lookup_key().hash(&mut h);
        Ok(Arc::new(h.finish()))
    }

    fn log_probs(&self, encoded: &Encoded, history: &[TokenId]) -> Result<Vec<f64>, ScorerError> {
        let key = *encoded.downcast_ref::<u64>().expect("state was encoded by this scorer");
        let mut h = DefaultHasher::new();
        key.hash(&mut h);
        history.hash(&mut h);
        let mut rng = ChaCha8Rng::seed_from_u64(h.finish());

        let bos = self.vocab.bos();
        let weights: Vec<f64> = (0..self.vocab.len())
            .map(|i| {
                if Some(TokenId(i as u32)) == bos {
                    0.0
                } else {
                    // exponential draws give a flat Dirichlet; the power sharpens it
                    let u: f64 = rng.random_range(f64::EPSILON..1.0);
                    (-u.ln()).powf(self.sharpness)
                }
            })
            .collect();
        let total: f64 = weights.iter().sum();
        Ok(weights.into_iter().map(|w| (w / total).ln()).collect())
    }
}

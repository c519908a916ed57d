use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{check_corpus, words, MetricError};

pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BleuOptions {
    /// Add-one smoothing of the precisions for orders above 1, for corpora
    /// too small to contain a matching 4-gram.
    pub smooth: bool,
}

/// Sufficient statistics of corpus BLEU. Merging is associative, so shards
/// may be counted independently.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BleuStats {
    pub matches: [u64; MAX_ORDER],
    pub totals: [u64; MAX_ORDER],
    pub hyp_len: u64,
    pub ref_len: u64,
}

fn ngrams<'s, 'w>(toks: &'s [&'w str], n: usize) -> HashMap<&'s [&'w str], u64> {
    let mut out = HashMap::new();
    if toks.len() >= n {
        for w in toks.windows(n) {
            *out.entry(w).or_insert(0) += 1;
        }
    }
    out
}

impl BleuStats {
    pub fn sentence<R: AsRef<str>>(hypothesis: &str, references: &[R]) -> Self {
        let hyp = words(hypothesis);
        let refs: Vec<Vec<&str>> = references.iter().map(|r| words(r.as_ref())).collect();
        let mut stats = Self {
            hyp_len: hyp.len() as u64,
            ..Self::default()
        };
        // closest reference length, shorter on ties
        stats.ref_len = refs
            .iter()
            .map(|r| r.len() as u64)
            .min_by_key(|&l| (l.abs_diff(stats.hyp_len), l))
            .unwrap_or(0);
        for n in 1..=MAX_ORDER {
            let counts = ngrams(&hyp, n);
            let mut max_ref: HashMap<&[&str], u64> = HashMap::new();
            for r in &refs {
                for (g, c) in ngrams(r, n) {
                    let slot = max_ref.entry(g).or_insert(0);
                    *slot = (*slot).max(c);
                }
            }
            stats.totals[n - 1] = hyp.len().saturating_sub(n - 1) as u64;
            stats.matches[n - 1] = counts
                .iter()
                .map(|(g, &c)| c.min(max_ref.get(g).copied().unwrap_or(0)))
                .sum();
        }
        stats
    }

    pub fn merge(&mut self, other: &Self) {
        for n in 0..MAX_ORDER {
            self.matches[n] += other.matches[n];
            self.totals[n] += other.totals[n];
        }
        self.hyp_len += other.hyp_len;
        self.ref_len += other.ref_len;
    }

    pub fn score(&self, opts: BleuOptions) -> f64 {
        if self.hyp_len == 0 {
            return 0.0;
        }
        let mut log_sum = 0.0;
        for n in 0..MAX_ORDER {
            let (m, t) = if opts.smooth && n > 0 {
                (self.matches[n] + 1, self.totals[n] + 1)
            } else {
                (self.matches[n], self.totals[n])
            };
            if m == 0 || t == 0 {
                return 0.0;
            }
            log_sum += (m as f64 / t as f64).ln();
        }
        let c = self.hyp_len as f64;
        let r = self.ref_len as f64;
        let bp = if c < r { (1.0 - r / c).exp() } else { 1.0 };
        100.0 * bp * (log_sum / MAX_ORDER as f64).exp()
    }
}

/// Corpus BLEU-4 with clipped counts and a brevity penalty against the
/// closest reference length. No smoothing.
pub fn bleu<H: AsRef<str>>(hypotheses: &[H], references: &[Vec<String>]) -> Result<f64, MetricError> {
    bleu_with(hypotheses, references, BleuOptions::default())
}

pub fn bleu_with<H: AsRef<str>>(
    hypotheses: &[H],
    references: &[Vec<String>],
    opts: BleuOptions,
) -> Result<f64, MetricError> {
    check_corpus(hypotheses, references)?;
    let mut total = BleuStats::default();
    for (h, r) in hypotheses.iter().zip(references) {
        total.merge(&BleuStats::sentence(h.as_ref(), r));
    }
    Ok(total.score(opts))
}

use std::collections::HashMap;
use std::hash::Hash;

use super::{check_corpus, MetricError};

/// Unrestricted Damerau-Levenshtein distance: insertions, deletions,
/// substitutions and adjacent transpositions, each of cost one, where
/// transposed symbols may be edited further (Lowrance-Wagner).
pub fn damerau_levenshtein<T: Eq + Hash + Copy>(a: &[T], b: &[T]) -> usize {
    let (m, n) = (a.len(), b.len());
    let inf = m + n;
    let w = n + 2;
    let at = |i: usize, j: usize| i * w + j;
    let mut d = vec![0usize; (m + 2) * w];
    d[0] = inf;
    for i in 0..=m {
        d[at(i + 1, 0)] = inf;
        d[at(i + 1, 1)] = i;
    }
    for j in 0..=n {
        d[at(0, j + 1)] = inf;
        d[at(1, j + 1)] = j;
    }
    // last row of `a` holding each symbol
    let mut last: HashMap<T, usize> = HashMap::new();
    for i in 1..=m {
        // last column of `b` in this row that matched
        let mut db = 0;
        for j in 1..=n {
            let i1 = last.get(&b[j - 1]).copied().unwrap_or(0);
            let j1 = db;
            let cost = if a[i - 1] == b[j - 1] {
                db = j;
                0
            } else {
                1
            };
            d[at(i + 1, j + 1)] = (d[at(i, j)] + cost)
                .min(d[at(i + 1, j)] + 1)
                .min(d[at(i, j + 1)] + 1)
                .min(d[at(i1, j1)] + (i - i1 - 1) + 1 + (j - j1 - 1));
        }
        last.insert(a[i - 1], i);
    }
    d[at(m + 1, n + 1)]
}

/// Character edit operations between two strings (Unicode scalar values).
pub fn char_edits(hypothesis: &str, reference: &str) -> usize {
    let h: Vec<char> = hypothesis.chars().collect();
    let r: Vec<char> = reference.chars().collect();
    damerau_levenshtein(&h, &r)
}

/// Character edit rate normalized by the hypothesis length. An empty
/// hypothesis scores 100.
pub fn character_ter(hypothesis: &str, reference: &str) -> f64 {
    let len = hypothesis.chars().count();
    if len == 0 {
        return 100.0;
    }
    100.0 * char_edits(hypothesis, reference) as f64 / len as f64
}

/// Best (lowest) rate over the references.
pub fn character_ter_multi<R: AsRef<str>>(hypothesis: &str, references: &[R]) -> f64 {
    references
        .iter()
        .map(|r| character_ter(hypothesis, r.as_ref()))
        .fold(f64::INFINITY, f64::min)
}

/// Mean sentence-level rate.
pub fn corpus_character_ter<H: AsRef<str>>(
    hypotheses: &[H],
    references: &[Vec<String>],
) -> Result<f64, MetricError> {
    check_corpus(hypotheses, references)?;
    let total: f64 = hypotheses
        .iter()
        .zip(references)
        .map(|(h, r)| character_ter_multi(h.as_ref(), r))
        .sum();
    Ok(total / hypotheses.len() as f64)
}

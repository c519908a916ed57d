use std::collections::HashMap;

use super::{check_corpus, words, MetricError};

const ALPHA: f64 = 0.9;
const GAMMA: f64 = 0.5;
const BETA: f64 = 3.0;
// node budget for the exact fewest-chunks search
const SEARCH_BUDGET: usize = 200_000;

/// Exact-match unigram alignment with the most matches and, among those,
/// the fewest chunks. `pairs[k] = (hyp index, ref index)` in hypothesis order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    pub pairs: Vec<(usize, usize)>,
    pub chunks: usize,
}

fn count_chunks(pairs: &[(usize, usize)]) -> usize {
    let mut chunks = 0;
    let mut prev: Option<(usize, usize)> = None;
    for &(h, r) in pairs {
        match prev {
            Some((ph, pr)) if ph + 1 == h && pr + 1 == r => {}
            _ => chunks += 1,
        }
        prev = Some((h, r));
    }
    chunks
}

impl Alignment {
    pub fn compute(hyp: &[&str], reference: &[&str]) -> Self {
        let mut positions: HashMap<&str, Vec<usize>> = HashMap::new();
        for (j, w) in reference.iter().enumerate() {
            positions.entry(w).or_default().push(j);
        }
        let mut hyp_count: HashMap<&str, usize> = HashMap::new();
        for w in hyp {
            *hyp_count.entry(w).or_default() += 1;
        }
        let target: usize = hyp_count
            .iter()
            .map(|(w, &c)| c.min(positions.get(w).map_or(0, Vec::len)))
            .sum();
        // matches still obtainable from hyp[i..]
        let mut suffix_need = vec![0usize; hyp.len() + 1];
        for i in (0..hyp.len()).rev() {
            suffix_need[i] = suffix_need[i + 1] + usize::from(positions.contains_key(hyp[i]));
        }

        let mut search = Search {
            hyp,
            positions: &positions,
            target,
            suffix_need: &suffix_need,
            used: vec![false; reference.len()],
            current: Vec::new(),
            best: None,
            nodes: 0,
        };
        search.walk(0, 0);
        let pairs = match search.best {
            Some((pairs, _)) if search.nodes <= SEARCH_BUDGET => pairs,
            _ => greedy(hyp, reference),
        };
        let chunks = count_chunks(&pairs);
        Self { pairs, chunks }
    }
}

struct Search<'a> {
    hyp: &'a [&'a str],
    positions: &'a HashMap<&'a str, Vec<usize>>,
    target: usize,
    suffix_need: &'a [usize],
    used: Vec<bool>,
    current: Vec<(usize, usize)>,
    best: Option<(Vec<(usize, usize)>, usize)>,
    nodes: usize,
}

impl Search<'_> {
    fn walk(&mut self, i: usize, chunks: usize) {
        self.nodes += 1;
        if self.nodes > SEARCH_BUDGET {
            return;
        }
        if let Some((_, best)) = &self.best {
            if chunks >= *best {
                return;
            }
        }
        if self.current.len() == self.target {
            self.best = Some((self.current.clone(), chunks));
            return;
        }
        if i == self.hyp.len() || self.current.len() + self.suffix_need[i] < self.target {
            return;
        }
        if let Some(cands) = self.positions.get(self.hyp[i]) {
            // try continuing the running chunk first
            let mut order: Vec<usize> = cands.iter().copied().filter(|&j| !self.used[j]).collect();
            let extends = |j: usize, cur: &[(usize, usize)]| {
                matches!(cur.last(), Some(&(ph, pr)) if ph + 1 == i && pr + 1 == j)
            };
            order.sort_by_key(|&j| !extends(j, &self.current));
            for j in order {
                let added = usize::from(!extends(j, &self.current));
                self.used[j] = true;
                self.current.push((i, j));
                self.walk(i + 1, chunks + added);
                self.current.pop();
                self.used[j] = false;
            }
        }
        self.walk(i + 1, chunks);
    }
}

fn greedy(hyp: &[&str], reference: &[&str]) -> Vec<(usize, usize)> {
    let mut used = vec![false; reference.len()];
    let mut pairs = Vec::new();
    for (i, w) in hyp.iter().enumerate() {
        let prefer = pairs.last().map(|&(_, r): &(usize, usize)| r + 1);
        let pick = prefer
            .filter(|&j| j < reference.len() && !used[j] && reference[j] == *w)
            .or_else(|| (0..reference.len()).find(|&j| !used[j] && reference[j] == *w));
        if let Some(j) = pick {
            used[j] = true;
            pairs.push((i, j));
        }
    }
    pairs
}

fn sentence_against(hyp: &[&str], reference: &[&str]) -> f64 {
    let a = Alignment::compute(hyp, reference);
    let m = a.pairs.len();
    if m == 0 {
        return 0.0;
    }
    let p = m as f64 / hyp.len() as f64;
    let r = m as f64 / reference.len() as f64;
    let fmean = p * r / (ALPHA * p + (1.0 - ALPHA) * r);
    let penalty = GAMMA * (a.chunks as f64 / m as f64).powf(BETA);
    fmean * (1.0 - penalty)
}

/// Exact-match METEOR without stemming or synonyms: best score over the
/// references of `Fmean * (1 - penalty)` with `Fmean = 10PR / (R + 9P)` and
/// `penalty = 0.5 (chunks / matches)^3`.
pub fn meteor_lite<R: AsRef<str>>(hypothesis: &str, references: &[R]) -> f64 {
    let hyp = words(hypothesis);
    let best = references
        .iter()
        .map(|r| sentence_against(&hyp, &words(r.as_ref())))
        .fold(0.0, f64::max);
    100.0 * best
}

/// Mean sentence score.
pub fn corpus_meteor_lite<H: AsRef<str>>(hypotheses: &[H], references: &[Vec<String>]) -> Result<f64, MetricError> {
    check_corpus(hypotheses, references)?;
    let total: f64 = hypotheses
        .iter()
        .zip(references)
        .map(|(h, r)| meteor_lite(h.as_ref(), r))
        .sum();
    Ok(total / hypotheses.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_closed_form() {
        for s in ["a", "a b", "the cat sat on the mat"] {
            let m = s.split(' ').count() as f64;
            assert!((meteor_lite(s, &[s]) - 100.0 * (1.0 - 0.5 / (m * m * m))).abs() < 1e-9);
        }
    }

    #[test]
    fn disjoint_is_zero() {
        assert_eq!(meteor_lite("x y", &["a b"]), 0.0);
    }

    #[test]
    fn scrambled_order_costs_half() {
        assert!((meteor_lite("a c b", &["a b c"]) - 50.0).abs() < 1e-9);
    }

    #[test]
    fn fewest_chunks_among_maximal_alignments() {
        // greedy left-to-right would link the first "a" to ref 0 and split
        let hyp = ["a", "b", "x", "a"];
        let reference = ["x", "a", "b"];
        let a = Alignment::compute(&hyp, &reference);
        assert_eq!(a.pairs.len(), 3);
        assert_eq!(a.chunks, 2);
    }

    #[test]
    fn alignment_matches_brute_force() {
        // every subset-injection over tiny inputs
        fn brute(h: &[&str], r: &[&str]) -> (usize, usize) {
            fn rec(h: &[&str], r: &[&str], i: usize, used: &mut Vec<bool>, cur: &mut Vec<(usize, usize)>, best: &mut (usize, usize)) {
                if i == h.len() {
                    let key = (cur.len(), count_chunks(cur));
                    if key.0 > best.0 || (key.0 == best.0 && key.1 < best.1) {
                        *best = key;
                    }
                    return;
                }
                rec(h, r, i + 1, used, cur, best);
                for j in 0..r.len() {
                    if !used[j] && r[j] == h[i] {
                        used[j] = true;
                        cur.push((i, j));
                        rec(h, r, i + 1, used, cur, best);
                        cur.pop();
                        used[j] = false;
                    }
                }
            }
            let mut best = (0, 0);
            rec(h, r, 0, &mut vec![false; r.len()], &mut Vec::new(), &mut best);
            best
        }
        let mut seqs: Vec<Vec<&str>> = vec![vec![]];
        let mut layer = seqs.clone();
        for _ in 0..4 {
            layer = layer
                .iter()
                .flat_map(|s| ["a", "b", "c"].map(|w| [s.as_slice(), &[w]].concat()))
                .collect();
            seqs.extend(layer.iter().cloned());
        }
        for h in &seqs {
            for r in seqs.iter().filter(|r| r.len() <= 3) {
                let a = Alignment::compute(h, r);
                assert_eq!((a.pairs.len(), a.chunks), brute(h, r), "{h:?} {r:?}");
            }
        }
    }
}

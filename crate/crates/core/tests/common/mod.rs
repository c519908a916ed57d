#![allow(dead_code)]

use std::sync::Arc;

use ipredict::corpus::{Dataset, Sample};
use ipredict::scorers::NBestScorer;
use ipredict::seqcore::{Modality, SourceContext, Vocabulary};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CAPTION_FINAL: &str = "A group of people sit on a bench under an umbrella.";
pub const CAPTION_INITIAL: &str = "A group of people sit on a ramp.";

/// Candidate list whose greedy rollouts replay the captioning example:
/// the top entry is the initial caption and each correction selects the
/// next one down.
pub fn caption_scorer() -> NBestScorer {
    let words = [
        "A", "group", "of", "people", "sit", "on", "a", "ramp.", "bench", ".", "under", "building.", "an", "umbrella.",
    ];
    let vocab = Arc::new(Vocabulary::from_words(words).unwrap());
    let mut s = NBestScorer::new(vocab);
    s.add("img", CAPTION_INITIAL, -0.1).unwrap();
    s.add("img", "A group of people sit on a bench .", -1.0).unwrap();
    s.add("img", "A group of people sit on a bench under a building.", -2.0).unwrap();
    s.add("img", CAPTION_FINAL, -3.0).unwrap();
    s
}

pub fn caption_source() -> SourceContext {
    SourceContext::text_with_id("img", "")
}

/// Distinct lowercase words of 2..=7 letters.
pub fn word_list(n: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let len = rng.random_range(2..=7);
        let w: String = (0..len).map(|_| rng.random_range(b'a'..=b'z') as char).collect();
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

/// A toy translation task: each source word `sN` maps to target word `N`
/// of a random lexicon, with occasional adjacent swaps.
pub struct Synthetic {
    pub lexicon: Vec<String>,
    pub pairs: Vec<(String, String)>,
}

pub fn synthetic(n_pairs: usize, lexicon_size: usize, seed: u64) -> Synthetic {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lexicon = word_list(lexicon_size, &mut rng);
    let mut pairs = Vec::with_capacity(n_pairs);
    for _ in 0..n_pairs {
        let len = rng.random_range(3..=10);
        let idx: Vec<usize> = (0..len).map(|_| rng.random_range(0..lexicon_size)).collect();
        let src: Vec<String> = idx.iter().map(|i| format!("s{i}")).collect();
        let mut tgt: Vec<&str> = idx.iter().map(|&i| lexicon[i].as_str()).collect();
        if len > 3 && rng.random_bool(0.3) {
            let at = rng.random_range(0..len - 1);
            tgt.swap(at, at + 1);
        }
        pairs.push((src.join(" "), tgt.join(" ")));
    }
    Synthetic { lexicon, pairs }
}

pub fn text_dataset(pairs: &[(String, String)]) -> Dataset {
    Dataset {
        modality: Modality::Text,
        samples: pairs
            .iter()
            .enumerate()
            .map(|(i, (s, t))| Sample {
                id: i.to_string(),
                source: SourceContext::text_with_id(i.to_string(), s.clone()),
                references: vec![t.clone()],
            })
            .collect(),
    }
}

/// An n-best corpus in which every reference sits at rank 2 or 3 of a
/// 5-best list of perturbed alternatives.
pub fn nbest_corpus(samples: usize, seed: u64) -> (NBestScorer, Dataset) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lexicon = word_list(300, &mut rng);
    let vocab = Arc::new(Vocabulary::from_words(lexicon.iter().map(String::as_str)).unwrap());
    let mut scorer = NBestScorer::new(Arc::clone(&vocab));
    let mut ds = Dataset {
        modality: Modality::Text,
        samples: Vec::new(),
    };
    for n in 0..samples {
        let id = format!("n{n}");
        let len = rng.random_range(5..=12);
        let reference: Vec<&str> = (0..len).map(|_| lexicon[rng.random_range(0..300)].as_str()).collect();
        let mut cands = Vec::new();
        while cands.len() < 4 {
            let mut c = reference.clone();
            for _ in 0..rng.random_range(1..=3) {
                let at = rng.random_range(0..c.len());
                match rng.random_range(0..3) {
                    0 => c[at] = lexicon[rng.random_range(0..300)].as_str(),
                    1 if c.len() > 2 => {
                        c.remove(at);
                    }
                    _ => c.insert(at, lexicon[rng.random_range(0..300)].as_str()),
                }
            }
            if c != reference && !cands.contains(&c) {
                cands.push(c);
            }
        }
        let rank = rng.random_range(1..=2); // zero-based: second or third
        cands.insert(rank, reference.clone());
        cands[rank + 1..].shuffle(&mut rng);
        for (r, c) in cands.iter().enumerate() {
            scorer.add(&id, &c.join(" "), -(r as f64) * 0.7).unwrap();
        }
        ds.samples.push(Sample {
            id: id.clone(),
            source: SourceContext::text_with_id(id, ""),
            references: vec![reference.join(" ")],
        });
    }
    (scorer, ds)
}

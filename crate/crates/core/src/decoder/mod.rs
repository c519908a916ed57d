//! Beam search and prefix-constrained search.
//!
//! Constrained search forces the validated complete tokens through the
//! scorer, restricts the first free step to the tokens the trailing fragment
//! admits, then runs ordinary beam search for the suffix.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::scorers::{DecoderState, Scorer, ScorerError};
use crate::seqcore::{
    PrefixConstraint, SourceContext, TokenId, TokenSequence, VocabError, Vocabulary,
};


#[derive(Debug, thiserror::Error)]
pub enum DecodeError {
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error("forced token at position {position} follows end-of-sequence")]
    ForcedPastEos { position: usize },
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
    #[error("search produced no hypothesis")]
    NoHypothesis,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LengthNormalization {
    #[default]
    None,
    DivideByLength,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub beam_size: usize,
    /// Maximum number of generated tokens (end-of-sequence included) beyond
    /// the forced prefix.
    pub max_length: usize,
    pub length_normalization: LengthNormalization,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            beam_size: 6,
            max_length: 64,
            length_normalization: LengthNormalization::None,
        }
    }
}

impl SearchConfig {
    pub fn with_beam(beam_size: usize) -> Self {
        Self {
            beam_size,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), DecodeError> {
        if self.beam_size == 0 {
            return Err(DecodeError::InvalidConfig("beam_size must be at least 1".into()));
        }
        if self.max_length == 0 {
            return Err(DecodeError::InvalidConfig("max_length must be at least 1".into()));
        }
        Ok(())
    }
}

/// A scored output sequence. Terminated iff it ends with end-of-sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub tokens: TokenSequence,
    pub log_prob: f64,
}

impl Hypothesis {
    pub fn is_terminated(&self, vocab: &Vocabulary) -> bool {
        self.tokens.last() == Some(vocab.eos())
    }

    pub fn render(&self, vocab: &Vocabulary) -> Result<String, VocabError> {
        vocab.detokenize(&self.tokens)
    }
}

/// Admissible next tokens for a typed word fragment: every word whose
/// surface starts with `fragment` (the word itself included). Specials are
/// never admitted. May be empty.
pub fn vocab_mask(vocab: &Vocabulary, fragment: &str) -> Vec<TokenId> {
    vocab.ids_with_prefix(fragment)
}

/// Scores `tokens` through the scorer without any search.
pub fn force_decode<S: Scorer + ?Sized>(
    scorer: &S,
    source: &SourceContext,
    tokens: &TokenSequence,
) -> Result<DecoderState, DecodeError> {
    let state = scorer.init_state(source)?;
    force_from(scorer, state, tokens.ids())
}

fn force_from<S: Scorer + ?Sized>(
    scorer: &S,
    mut state: DecoderState,
    tokens: &[TokenId],
) -> Result<DecoderState, DecodeError> {
    let eos = scorer.vocab().eos();
    for (position, &token) in tokens.iter().enumerate() {
        if state.is_terminated() {
            return Err(DecodeError::ForcedPastEos { position });
        }
        if !scorer.vocab().contains(token) {
            return Err(ScorerError::InvalidToken(token).into());
        }
        let dist = scorer.next_distribution(&state)?;
        state = state.extend(token, dist[token.index()], eos);
    }
    Ok(state)
}

pub fn beam_search<S: Scorer + ?Sized>(
    scorer: &S,
    source: &SourceContext,
    cfg: &SearchConfig,
) -> Result<Hypothesis, DecodeError> {
    cfg.validate()?;
    let state = scorer.init_state(source)?;
    search(scorer, state, TokenSequence::new(), FirstStep::Free, cfg)
}

/// The most probable hypothesis whose rendering starts with the
/// constraint's validated text (or equals it, for a closed constraint).
pub fn constrained_search<S: Scorer + ?Sized>(
    scorer: &S,
    source: &SourceContext,
    constraint: &PrefixConstraint,
    cfg: &SearchConfig,
) -> Result<Hypothesis, DecodeError> {
    cfg.validate()?;
    let vocab = scorer.vocab();
    let mut prefix = constraint.complete_tokens().clone();
    let mut state = force_decode(scorer, source, &prefix)?;

    if constraint.is_closed() {
        let dist = scorer.next_distribution(&state)?;
        let eos = vocab.eos();
        state = state.extend(eos, dist[eos.index()], eos);
        prefix.push(eos);
        return Ok(Hypothesis {
            tokens: prefix,
            log_prob: state.log_prob(),
        });
    }

    let first = if !constraint.fragment().is_empty() {
        let mask = vocab_mask(vocab, constraint.fragment());
        if mask.is_empty() {
            // nothing in the vocabulary spells the fragment: emit it verbatim
            let unk = vocab.unk();
            let dist = scorer.next_distribution(&state)?;
            state = state.extend(unk, dist[unk.index()], vocab.eos());
            prefix.push_literal(unk, constraint.fragment());
            FirstStep::Free
        } else {
            FirstStep::Only(mask)
        }
    } else if !prefix.is_empty() {
        // validated text ends with a separator, so another word must follow
        FirstStep::NotEos
    } else {
        FirstStep::Free
    };

    let hyp = search(scorer, state, prefix, first, cfg)?;
    debug_assert!(
        constraint.admits(&hyp.render(vocab)?),
        "constrained hypothesis violates its prefix"
    );
    Ok(hyp)
}

enum FirstStep {
    Free,
    Only(Vec<TokenId>),
    NotEos,
}

struct Live {
    state: DecoderState,
    suffix: Vec<TokenId>,
    // log-probability of the suffix alone; the forced prefix is a shared constant
    score: f64,
}

struct Finished {
    state: DecoderState,
    suffix: Vec<TokenId>,
    rank: f64,
}

struct Candidate {
    parent: usize,
    token: TokenId,
    token_lp: f64,
    score: f64,
    rank: f64,
}

fn rank(score: f64, len: usize, norm: LengthNormalization) -> f64 {
    match norm {
        LengthNormalization::None => score,
        LengthNormalization::DivideByLength => score / len as f64,
    }
}

/// Better first: higher rank, then lexicographically smaller ids (which puts
/// a shorter sequence before its own extensions).
fn order(rank_a: f64, seq_a: (&[TokenId], Option<TokenId>), rank_b: f64, seq_b: (&[TokenId], Option<TokenId>)) -> Ordering {
    rank_b
        .total_cmp(&rank_a)
        .then_with(|| seq_a.0.iter().chain(seq_a.1.iter()).cmp(seq_b.0.iter().chain(seq_b.1.iter())))
}

/// Beam search with a shrinking beam: each step keeps the best
/// `beam_size - finished` expansions; those ending in end-of-sequence are
/// set aside as finished. With `beam_size == 1` this is greedy decoding.
fn search<S: Scorer + ?Sized>(
    scorer: &S,
    start: DecoderState,
    prefix: TokenSequence,
    first: FirstStep,
    cfg: &SearchConfig,
) -> Result<Hypothesis, DecodeError> {
    let vocab = scorer.vocab();
    let eos = vocab.eos();
    let bos = vocab.bos();
    let norm = cfg.length_normalization;

    let mut live = vec![Live {
        state: start,
        suffix: Vec::new(),
        score: 0.0,
    }];
    let mut finished: Vec<Finished> = Vec::new();

    for step in 0..cfg.max_length {
        let width = cfg.beam_size - finished.len();
        if live.is_empty() || width == 0 {
            break;
        }

        let mut candidates = Vec::new();
        for (parent, beam) in live.iter().enumerate() {
            let dist = scorer.next_distribution(&beam.state)?;
            let mut push = |token: TokenId| {
                let token_lp = dist[token.index()];
                let score = beam.score + token_lp;
                candidates.push(Candidate {
                    parent,
                    token,
                    token_lp,
                    score,
                    rank: rank(score, step + 1, norm),
                });
            };
            match (&first, step) {
                (FirstStep::Only(ids), 0) => ids.iter().copied().for_each(&mut push),
                (FirstStep::NotEos, 0) => (0..dist.len() as u32)
                    .map(TokenId)
                    .filter(|&t| t != eos && Some(t) != bos)
                    .for_each(&mut push),
                _ => (0..dist.len() as u32).map(TokenId).for_each(&mut push),
            }
        }
        if candidates.iter().any(|c| c.score > f64::NEG_INFINITY) {
            candidates.retain(|c| c.score > f64::NEG_INFINITY);
        }

        let cmp = |a: &Candidate, b: &Candidate| {
            order(
                a.rank,
                (&live[a.parent].suffix, Some(a.token)),
                b.rank,
                (&live[b.parent].suffix, Some(b.token)),
            )
        };
        if candidates.len() > width {
            candidates.select_nth_unstable_by(width - 1, cmp);
            candidates.truncate(width);
        }
        candidates.sort_by(cmp);

        let mut next = Vec::with_capacity(candidates.len());
        for c in candidates {
            let parent = &live[c.parent];
            let mut suffix = Vec::with_capacity(parent.suffix.len() + 1);
            suffix.extend_from_slice(&parent.suffix);
            suffix.push(c.token);
            let state = parent.state.extend(c.token, c.token_lp, eos);
            if c.token == eos {
                finished.push(Finished {
                    state,
                    suffix,
                    rank: c.rank,
                });
            } else {
                next.push(Live {
                    state,
                    suffix,
                    score: c.score,
                });
            }
        }
        live = next;

        // scores never increase, so a finished hypothesis that beats every
        // live one by raw score cannot be overtaken
        if norm == LengthNormalization::None {
            let best_finished = finished.iter().map(|f| f.rank).fold(f64::NEG_INFINITY, f64::max);
            let best_live = live.iter().map(|l| l.score).fold(f64::NEG_INFINITY, f64::max);
            if !live.is_empty() && best_finished > best_live {
                break;
            }
        }
    }

    let best = finished
        .iter()
        .min_by(|a, b| order(a.rank, (&a.suffix, None), b.rank, (&b.suffix, None)));
    let (state, suffix) = match best {
        Some(f) => (f.state.clone(), f.suffix.clone()),
        None => {
            let beam = live
                .iter()
                .min_by(|a, b| {
                    let ra = rank(a.score, a.suffix.len(), norm);
                    let rb = rank(b.score, b.suffix.len(), norm);
                    order(ra, (&a.suffix, None), rb, (&b.suffix, None))
                })
                .ok_or(DecodeError::NoHypothesis)?;
            let dist = scorer.next_distribution(&beam.state)?;
            let state = beam.state.extend(eos, dist[eos.index()], eos);
            let mut suffix = beam.suffix.clone();
            suffix.push(eos);
            (state, suffix)
        }
    };

    let mut tokens = prefix;
    for t in suffix {
        tokens.push(t);
    }
    Ok(Hypothesis {
        tokens,
        log_prob: state.log_prob(),
    })
}

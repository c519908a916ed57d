use serde::{Deserialize, Serialize};

use super::tokens::TokenSequence;
use super::vocab::{Vocabulary, SEPARATOR};

/// What the user typed at the feedback position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Correction {
    Char(char),
    /// The hypothesis is correct up to the position and must end there.
    EndOfText,
}

/// One correction event `f`: a character index (Unicode scalar values) into
/// the current hypothesis and the character that belongs there.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackSignal {
    pub position: usize,
    pub correction: Correction,
}

impl FeedbackSignal {
    pub fn char(position: usize, c: char) -> Self {
        Self {
            position,
            correction: Correction::Char(c),
        }
    }

    pub fn end_of_text(position: usize) -> Self {
        Self {
            position,
            correction: Correction::EndOfText,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PrefixError {
    #[error("feedback position {position} is beyond the hypothesis length {len}")]
    OutOfBounds { position: usize, len: usize },
}

/// The user-validated prefix, split at the last separator into complete
/// tokens (forced verbatim) and a trailing word fragment (resolved by the
/// vocabulary mask).
///
/// Rendering: with complete tokens, `detok(complete) + " " + fragment`;
/// without, just `fragment`. A closed constraint is a full output and renders
/// as `detok(complete)` alone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixConstraint {
    complete: TokenSequence,
    fragment: String,
    closed: bool,
    text: String,
    char_length: usize,
}

impl PrefixConstraint {
    pub fn empty() -> Self {
        Self {
            complete: TokenSequence::new(),
            fragment: String::new(),
            closed: false,
            text: String::new(),
            char_length: 0,
        }
    }

    /// Builds the open constraint whose rendering is exactly `validated`.
    pub fn from_validated(validated: &str, vocab: &Vocabulary) -> Self {
        let (complete, fragment) = match validated.rfind(SEPARATOR) {
            Some(at) => (
                tokenize_exact(&validated[..at], vocab),
                validated[at + SEPARATOR.len_utf8()..].to_owned(),
            ),
            None => (TokenSequence::new(), validated.to_owned()),
        };
        Self {
            complete,
            fragment,
            closed: false,
            text: validated.to_owned(),
            char_length: validated.chars().count(),
        }
    }

    /// A constraint that admits exactly `validated` and nothing after it.
    pub fn closed(validated: &str, vocab: &Vocabulary) -> Self {
        Self {
            complete: if validated.is_empty() {
                TokenSequence::new()
            } else {
                tokenize_exact(validated, vocab)
            },
            fragment: String::new(),
            closed: true,
            text: validated.to_owned(),
            char_length: validated.chars().count(),
        }
    }

    pub fn complete_tokens(&self) -> &TokenSequence {
        &self.complete
    }

    pub fn fragment(&self) -> &str {
        &self.fragment
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn is_empty(&self) -> bool {
        self.char_length == 0 && !self.closed
    }

    /// Number of validated characters.
    pub fn char_length(&self) -> usize {
        self.char_length
    }

    /// The validated text.
    pub fn as_str(&self) -> &str {
        &self.text
    }

    /// Recomputes the rendering from the token/fragment split.
    pub fn render(&self, vocab: &Vocabulary) -> String {
        let tokens = vocab
            .detokenize(&self.complete)
            .expect("constraint tokens come from the same vocabulary");
        if self.closed {
            return tokens;
        }
        if self.complete.is_empty() {
            return self.fragment.clone();
        }
        let mut out = tokens;
        out.push(SEPARATOR);
        out.push_str(&self.fragment);
        out
    }

    /// True when `hypothesis` is compatible with this constraint.
    pub fn admits(&self, hypothesis: &str) -> bool {
        if self.closed {
            hypothesis == self.text
        } else {
            hypothesis.starts_with(&self.text)
        }
    }
}

// Like `Vocabulary::tokenize` but keeps empty units (from repeated or
// leading separators) as empty literals, so rendering is exact.
fn tokenize_exact(text: &str, vocab: &Vocabulary) -> TokenSequence {
    let mut seq = TokenSequence::new();
    for unit in text.split(SEPARATOR) {
        match vocab.id_of(unit) {
            Some(id) => seq.push(id),
            None => seq.push_literal(vocab.unk(), unit),
        }
    }
    seq
}

/// Applies one feedback signal to `hypothesis`: characters `[0, position)`
/// are validated and the corrected character appended.
///
/// A corrected separator closes the word it follows, leaving an empty
/// fragment.
pub fn split_prefix(
    hypothesis: &str,
    feedback: &FeedbackSignal,
    vocab: &Vocabulary,
) -> Result<PrefixConstraint, PrefixError> {
    let len = hypothesis.chars().count();
    if feedback.position > len {
        return Err(PrefixError::OutOfBounds {
            position: feedback.position,
            len,
        });
    }
    let cut = hypothesis
        .char_indices()
        .nth(feedback.position)
        .map_or(hypothesis.len(), |(b, _)| b);
    let mut validated = hypothesis[..cut].to_owned();
    match feedback.correction {
        Correction::Char(c) => {
            validated.push(c);
            Ok(PrefixConstraint::from_validated(&validated, vocab))
        }
        Correction::EndOfText => Ok(PrefixConstraint::closed(&validated, vocab)),
    }
}

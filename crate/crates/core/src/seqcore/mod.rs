//! Core domain types: vocabulary, token sequences, source objects and the
//! validated-prefix constraint derived from user feedback.

mod prefix;
mod source;
mod tokens;
mod vocab;

pub use prefix::{split_prefix, Correction, FeedbackSignal, PrefixConstraint, PrefixError};
pub use source::{FeatureError, FeatureMatrix, Modality, SourceContext};
pub use tokens::TokenSequence;
pub use vocab::{TokenId, VocabEntry, VocabError, Vocabulary, SEPARATOR};

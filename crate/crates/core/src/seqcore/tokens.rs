use std::collections::BTreeMap;

use super::vocab::TokenId;

/// Token ids plus the original surfaces of positions that were mapped to the
/// unknown id, so rendering reproduces the input exactly.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TokenSequence {
    ids: Vec<TokenId>,
    literals: BTreeMap<usize, String>,
}

impl TokenSequence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_ids<I: IntoIterator<Item = TokenId>>(ids: I) -> Self {
        Self {
            ids: ids.into_iter().collect(),
            literals: BTreeMap::new(),
        }
    }

    pub fn ids(&self) -> &[TokenId] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn last(&self) -> Option<TokenId> {
        self.ids.last().copied()
    }

    pub fn push(&mut self, id: TokenId) {
        self.ids.push(id);
    }

    /// Appends `id` carrying `surface` as its rendering.
    pub fn push_literal(&mut self, id: TokenId, surface: impl Into<String>) {
        self.literals.insert(self.ids.len(), surface.into());
        self.ids.push(id);
    }

    pub fn literal(&self, position: usize) -> Option<&str> {
        self.literals.get(&position).map(String::as_str)
    }

    pub fn extend_from(&mut self, other: &TokenSequence) {
        let offset = self.ids.len();
        self.ids.extend_from_slice(&other.ids);
        for (pos, lit) in &other.literals {
            self.literals.insert(offset + pos, lit.clone());
        }
    }
}

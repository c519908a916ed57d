use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use super::tokens::TokenSequence;

/// The single separator used to join token surfaces.
pub const SEPARATOR: char = ' ';

const BOS_SURFACE: &str = "<s>";
const EOS_SURFACE: &str = "</s>";
const UNK_SURFACE: &str = "<unk>";

/// Dense token identifier, `0..vocab.len()`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct TokenId(pub u32);

impl TokenId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VocabEntry {
    Word(String),
    Bos,
    Eos,
    Unk,
}

#[derive(Debug, thiserror::Error)]
pub enum VocabError {
    #[error("duplicate surface {surface:?} at ids {first} and {second}")]
    DuplicateSurface {
        surface: String,
        first: TokenId,
        second: TokenId,
    },
    #[error("empty surface at id {0}")]
    EmptySurface(TokenId),
    #[error("surface {surface:?} at id {id} contains whitespace")]
    WhitespaceInSurface { surface: String, id: TokenId },
    #[error("special token {0} declared twice")]
    DuplicateSpecial(&'static str),
    #[error("vocabulary has no end-of-sequence token")]
    MissingEos,
    #[error("vocabulary has no unknown token")]
    MissingUnk,
    #[error("token id {0} is not in the vocabulary")]
    InvalidId(TokenId),
    #[error("vocabulary too large")]
    TooLarge,
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Output token inventory.
///
/// Word surfaces are unique, non-empty and never contain whitespace. The
/// end-of-sequence and unknown tokens are mandatory; begin-of-sequence is
/// optional. Ids are dense in declaration order.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    surfaces: Vec<String>,
    index: HashMap<String, TokenId>,
    // word ids sorted by surface, for prefix range queries
    by_surface: Vec<TokenId>,
    bos: Option<TokenId>,
    eos: TokenId,
    unk: TokenId,
}

impl Vocabulary {
    pub fn from_entries<I>(entries: I) -> Result<Self, VocabError>
    where
        I: IntoIterator<Item = VocabEntry>,
    {
        let mut surfaces = Vec::new();
        let mut index = HashMap::new();
        let (mut bos, mut eos, mut unk) = (None, None, None);

        for (i, entry) in entries.into_iter().enumerate() {
            let id = TokenId(u32::try_from(i).map_err(|_| VocabError::TooLarge)?);
            let special = |slot: &mut Option<TokenId>, name: &'static str| {
                if slot.replace(id).is_some() {
                    Err(VocabError::DuplicateSpecial(name))
                } else {
                    Ok(())
                }
            };
            match entry {
                VocabEntry::Bos => {
                    special(&mut bos, "#bos")?;
                    surfaces.push(BOS_SURFACE.to_owned());
                }
                VocabEntry::Eos => {
                    special(&mut eos, "#eos")?;
                    surfaces.push(EOS_SURFACE.to_owned());
                }
                VocabEntry::Unk => {
                    special(&mut unk, "#unk")?;
                    surfaces.push(UNK_SURFACE.to_owned());
                }
                VocabEntry::Word(w) => {
                    if w.is_empty() {
                        return Err(VocabError::EmptySurface(id));
                    }
                    if w.chars().any(char::is_whitespace) {
                        return Err(VocabError::WhitespaceInSurface { surface: w, id });
                    }
                    if let Some(&first) = index.get(&w) {
                        return Err(VocabError::DuplicateSurface {
                            surface: w,
                            first,
                            second: id,
                        });
                    }
                    index.insert(w.clone(), id);
                    surfaces.push(w);
                }
            }
        }

        let eos = eos.ok_or(VocabError::MissingEos)?;
        let unk = unk.ok_or(VocabError::MissingUnk)?;
        let mut by_surface: Vec<TokenId> = index.values().copied().collect();
        by_surface.sort_by(|a, b| surfaces[a.index()].cmp(&surfaces[b.index()]));

        Ok(Self {
            surfaces,
            index,
            by_surface,
            bos,
            eos,
            unk,
        })
    }

    /// `#bos`, `#eos`, `#unk` at ids 0, 1, 2, followed by `words` in order.
    pub fn from_words<I, S>(words: I) -> Result<Self, VocabError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let specials = [VocabEntry::Bos, VocabEntry::Eos, VocabEntry::Unk];
        Self::from_entries(
            specials
                .into_iter()
                .chain(words.into_iter().map(|w| VocabEntry::Word(w.into()))),
        )
    }

    /// Collects every distinct space-separated unit of `texts`, in order of
    /// first appearance, behind the standard special header.
    pub fn build_from_texts<'a, I>(texts: I) -> Result<Self, VocabError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut seen = std::collections::HashSet::new();
        let mut words = Vec::new();
        for text in texts {
            for w in text.split_whitespace() {
                if seen.insert(w) {
                    words.push(w.to_owned());
                }
            }
        }
        Self::from_words(words)
    }

    /// Parses the line-oriented vocabulary format: one surface per line,
    /// line number (from 0) is the id, and the lines `#bos`, `#eos`, `#unk`
    /// declare the special tokens.
    pub fn parse(text: &str) -> Result<Self, VocabError> {
        let mut lines: Vec<&str> = text.split('\n').collect();
        if lines.last() == Some(&"") {
            lines.pop();
        }
        Self::from_entries(lines.into_iter().map(|line| {
            match line.strip_suffix('\r').unwrap_or(line) {
                "#bos" => VocabEntry::Bos,
                "#eos" => VocabEntry::Eos,
                "#unk" => VocabEntry::Unk,
                w => VocabEntry::Word(w.to_owned()),
            }
        }))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, VocabError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| VocabError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.surfaces.iter().enumerate() {
            let id = TokenId(i as u32);
            if Some(id) == self.bos {
                out.push_str("#bos");
            } else if id == self.eos {
                out.push_str("#eos");
            } else if id == self.unk {
                out.push_str("#unk");
            } else {
                out.push_str(s);
            }
            out.push('\n');
        }
        out
    }

    pub fn len(&self) -> usize {
        self.surfaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.surfaces.is_empty()
    }

    pub fn bos(&self) -> Option<TokenId> {
        self.bos
    }

    pub fn eos(&self) -> TokenId {
        self.eos
    }

    pub fn unk(&self) -> TokenId {
        self.unk
    }

    pub fn is_special(&self, id: TokenId) -> bool {
        id == self.eos || id == self.unk || Some(id) == self.bos
    }

    pub fn contains(&self, id: TokenId) -> bool {
        id.index() < self.surfaces.len()
    }

    pub fn id_of(&self, surface: &str) -> Option<TokenId> {
        self.index.get(surface).copied()
    }

    pub fn surface(&self, id: TokenId) -> Result<&str, VocabError> {
        self.surfaces
            .get(id.index())
            .map(String::as_str)
            .ok_or(VocabError::InvalidId(id))
    }

    /// Ids of the non-special tokens, in id order.
    pub fn word_ids(&self) -> impl Iterator<Item = TokenId> + '_ {
        (0..self.surfaces.len() as u32)
            .map(TokenId)
            .filter(|&id| !self.is_special(id))
    }

    /// Word ids whose surface starts with `prefix`, sorted by id.
    pub fn ids_with_prefix(&self, prefix: &str) -> Vec<TokenId> {
        let start = self
            .by_surface
            .partition_point(|id| self.surfaces[id.index()].as_str() < prefix);
        let mut ids: Vec<TokenId> = self.by_surface[start..]
            .iter()
            .copied()
            .take_while(|id| self.surfaces[id.index()].starts_with(prefix))
            .collect();
        ids.sort_unstable();
        ids
    }

    /// Maps each space-separated unit of `text` to its id. Units outside the
    /// vocabulary become the unknown id and keep their surface as a literal.
    pub fn tokenize(&self, text: &str) -> TokenSequence {
        let mut seq = TokenSequence::new();
        if text.is_empty() {
            return seq;
        }
        for unit in text.split(SEPARATOR) {
            match self.index.get(unit) {
                Some(&id) => seq.push(id),
                None => seq.push_literal(self.unk, unit),
            }
        }
        seq
    }

    /// Joins surfaces with single spaces. Begin-of-sequence renders as
    /// nothing; end-of-sequence terminates the output.
    pub fn detokenize(&self, seq: &TokenSequence) -> Result<String, VocabError> {
        let mut out = String::new();
        let mut first = true;
        for (pos, &id) in seq.ids().iter().enumerate() {
            if !self.contains(id) {
                return Err(VocabError::InvalidId(id));
            }
            if id == self.eos {
                break;
            }
            if Some(id) == self.bos {
                continue;
            }
            if !first {
                out.push(SEPARATOR);
            }
            first = false;
            match seq.literal(pos) {
                Some(lit) if id == self.unk => out.push_str(lit),
                _ => out.push_str(&self.surfaces[id.index()]),
            }
        }
        Ok(out)
    }
}

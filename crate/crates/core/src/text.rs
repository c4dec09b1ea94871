//! Tokenization and fold-local vocabularies.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Separator between the target speaker's text and the context in the S+C format.
pub const CONTEXT_SEPARATOR: &str = "<ctx>";

/// Lowercases and splits on whitespace and punctuation.
///
/// Tokens are maximal runs of alphanumeric characters. The context separator
/// survives as a single token.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split(CONTEXT_SEPARATOR).enumerate() {
        let (i, piece) = chunk;
        if i > 0 {
            out.push(String::from(CONTEXT_SEPARATOR));
        }
        let mut current = String::new();
        for c in piece.chars() {
            if c.is_alphanumeric() {
                current.extend(c.to_lowercase());
            } else if !current.is_empty() {
                out.push(core::mem::take(&mut current));
            }
        }
        if !current.is_empty() {
            out.push(current);
        }
    }
    out
}

/// Token-to-index map. Index 0 is reserved for unknown tokens.
///
/// Serializes as the list of known tokens (without the unknown slot).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "Vec<String>", from = "Vec<String>")]
pub struct Vocabulary {
    index: BTreeMap<String, usize>,
    tokens: Vec<String>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary::from_tokens(core::iter::empty())
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(mut v: Vocabulary) -> Vec<String> {
        v.tokens.remove(0);
        v.tokens
    }
}

impl From<Vec<String>> for Vocabulary {
    fn from(tokens: Vec<String>) -> Vocabulary {
        Vocabulary::from_tokens(tokens)
    }
}

impl Vocabulary {
    pub const UNKNOWN: usize = 0;
    pub const UNKNOWN_TOKEN: &'static str = "<unk>";

    /// Keeps tokens seen at least `min_freq` times, in lexicographic order.
    pub fn build<'a, I>(docs: I, min_freq: usize) -> Self
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in docs {
            for t in doc {
                *freq.entry(t.as_str()).or_default() += 1;
            }
        }
        Vocabulary::from_tokens(
            freq.into_iter()
                .filter(|&(_, n)| n >= min_freq)
                .map(|(t, _)| String::from(t)),
        )
    }

    /// Vocabulary over the given tokens in order, after the unknown slot.
    pub fn from_tokens(tokens: impl IntoIterator<Item = String>) -> Self {
        let mut v = Vocabulary {
            index: BTreeMap::new(),
            tokens: alloc::vec![String::from(Self::UNKNOWN_TOKEN)],
        };
        for t in tokens {
            if t != Self::UNKNOWN_TOKEN && !v.index.contains_key(&t) {
                v.index.insert(t.clone(), v.tokens.len());
                v.tokens.push(t);
            }
        }
        v
    }

    /// Size including the unknown slot.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(Self::UNKNOWN)
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }

    /// Tokens in index order, starting with the unknown token.
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.get(t)).collect()
    }
}

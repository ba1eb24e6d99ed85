//! Tokenized text, class labels, and perturbation arithmetic.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TextError {
    #[error("text contains no tokens")]
    EmptyText,
    #[error("token sequences differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
}

/// A classifier decision: class index plus an optional human-readable name.
///
/// Equality of predictions is decided on `id` alone; `name` is display sugar
/// that remote victims may or may not send along.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Label {
    pub id: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub name: Option<String>,
}

impl Label {
    pub fn new(id: usize) -> Self {
        Label { id, name: None }
    }

    pub fn named(id: usize, name: impl Into<String>) -> Self {
        Label {
            id,
            name: Some(name.into()),
        }
    }

    /// True when both labels refer to the same class, ignoring names.
    pub fn same_class(&self, other: &Label) -> bool {
        self.id == other.id
    }
}

/// An immutable token sequence, optionally linked back to the unperturbed
/// sequence it was derived from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TokenSequence {
    tokens: Vec<String>,
    #[serde(skip)]
    original: Option<Arc<TokenSequence>>,
    substituted_positions: BTreeSet<usize>,
}

impl PartialEq for TokenSequence {
    fn eq(&self, other: &Self) -> bool {
        self.tokens == other.tokens && self.substituted_positions == other.substituted_positions
    }
}

impl Eq for TokenSequence {}

impl TokenSequence {
    /// Wraps pre-split tokens. Fails on an empty list.
    pub fn new(tokens: Vec<String>) -> Result<Self, TextError> {
        if tokens.is_empty() {
            return Err(TextError::EmptyText);
        }
        Ok(TokenSequence {
            tokens,
            original: None,
            substituted_positions: BTreeSet::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, index: usize) -> &str {
        &self.tokens[index]
    }

    /// The unperturbed sequence this one descends from, or `self` for roots.
    pub fn original(&self) -> &TokenSequence {
        self.original.as_deref().unwrap_or(self)
    }

    /// Positions whose token differs from the original sequence.
    pub fn substituted_positions(&self) -> &BTreeSet<usize> {
        &self.substituted_positions
    }

    pub fn substitution_count(&self) -> usize {
        self.substituted_positions.len()
    }

    /// Space-joined surface form.
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }

    /// Returns a copy with `replacement` at `index`, linked to the shared
    /// original. Panics if `index` is out of bounds.
    pub fn with_substitution(&self, index: usize, replacement: impl Into<String>) -> TokenSequence {
        assert!(
            index < self.tokens.len(),
            "substitution index out of bounds"
        );
        let root = match &self.original {
            Some(root) => Arc::clone(root),
            None => Arc::new(self.clone()),
        };
        let mut tokens = self.tokens.clone();
        tokens[index] = replacement.into();
        let mut substituted = self.substituted_positions.clone();
        if tokens[index] == root.tokens[index] {
            substituted.remove(&index);
        } else {
            substituted.insert(index);
        }
        TokenSequence {
            tokens,
            original: Some(root),
            substituted_positions: substituted,
        }
    }
}

/// Splits on whitespace, then peels leading and trailing ASCII punctuation off
/// each chunk into standalone tokens. Internal punctuation (as in "don't")
/// stays inside its word, and case is preserved.
pub fn tokenize(text: &str) -> Result<TokenSequence, TextError> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let mut start = 0;
        let mut end = chars.len();
        while start < end && chars[start].is_ascii_punctuation() {
            start += 1;
        }
        while end > start && chars[end - 1].is_ascii_punctuation() {
            end -= 1;
        }
        for c in &chars[..start] {
            tokens.push(c.to_string());
        }
        if start < end {
            tokens.push(chars[start..end].iter().collect());
        }
        for c in &chars[end..] {
            tokens.push(c.to_string());
        }
    }
    TokenSequence::new(tokens)
}

/// Fraction of positions where the two sequences disagree, by exact
/// case-sensitive string equality.
pub fn perturbation_rate<F: Scalar>(a: &TokenSequence, b: &TokenSequence) -> Result<F, TextError> {
    if a.len() != b.len() {
        return Err(TextError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let differing = a
        .tokens
        .iter()
        .zip(&b.tokens)
        .filter(|(x, y)| x != y)
        .count();
    Ok(F::from_count(differing) / F::from_count(a.len()))
}

//! Review text normalization into lowercase token sequences.
//!
//! Punctuation, uppercase, and special characters are removed: after NFC
//! normalization and lowercasing, every character outside `[a-z0-9']` is
//! replaced by a space and the text is split on whitespace. Apostrophes
//! survive only between two alphanumeric characters, so "doesn't" stays
//! one token while quoting apostrophes disappear.

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

/// An ordered sequence of lowercase tokens.
///
/// Tokens produced by [`normalize`] contain only ASCII lowercase letters,
/// digits, and interior apostrophes. Model rewrites may additionally emit
/// category names and the generic placeholder token.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    pub fn from_tokens(tokens: Vec<String>) -> TokenSeq {
        TokenSeq(tokens)
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn join(&self, sep: &str) -> String {
        self.0.join(sep)
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }
}

impl FromIterator<String> for TokenSeq {
    fn from_iter<I: IntoIterator<Item = String>>(iter: I) -> Self {
        TokenSeq(iter.into_iter().collect())
    }
}

/// Normalize raw text into the token sequence every representation model consumes.
pub fn normalize(text: &str) -> TokenSeq {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.nfc().flat_map(char::to_lowercase) {
        match ch {
            'a'..='z' | '0'..='9' => current.push(ch),
            // U+2019 is the typographic form of the same apostrophe.
            '\'' | '\u{2019}' => current.push('\''),
            _ => flush(&mut current, &mut tokens),
        }
    }
    flush(&mut current, &mut tokens);
    TokenSeq(tokens)
}

fn flush(current: &mut String, tokens: &mut Vec<String>) {
    if current.is_empty() {
        return;
    }
    let cleaned = strip_loose_apostrophes(current);
    if !cleaned.is_empty() {
        tokens.push(cleaned);
    }
    current.clear();
}

/// Drop every apostrophe not flanked by alphanumerics on both sides.
fn strip_loose_apostrophes(raw: &str) -> String {
    // By construction `raw` is ASCII in [a-z0-9'].
    let bytes = raw.as_bytes();
    let mut out = String::with_capacity(raw.len());
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'\'' {
            let flanked =
                i > 0 && i + 1 < bytes.len() && bytes[i - 1] != b'\'' && bytes[i + 1] != b'\'';
            if flanked {
                out.push('\'');
            }
        } else {
            out.push(b as char);
        }
    }
    out
}

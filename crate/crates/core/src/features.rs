//! Vocabulary construction with document-frequency pruning, and sparse
//! token-count vectors over it.
//!
//! A vocabulary is always built from training documents only; tokens seen
//! in fewer than `min_df` distinct documents are pruned. Feature indices
//! are assigned in lexicographic token order, so the mapping is a pure
//! function of the training token sets.

use std::borrow::Borrow;
use std::collections::{HashMap, HashSet};
use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textnorm::TokenSeq;

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("no token reaches the document-frequency threshold {min_df}")]
    EmptyVocabulary { min_df: u32 },
    #[error("min_df must be at least 1")]
    MinDfZero,
}

/// Pruned token → feature-index map with per-token document frequencies.
///
/// `tokens` is sorted, so the index of a token is its rank; lookups are
/// binary searches and serialization stays trivial.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    tokens: Vec<String>,
    doc_freq: Vec<u32>,
    min_df: u32,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn min_df(&self) -> u32 {
        self.min_df
    }

    pub fn index_of(&self, token: &str) -> Option<u32> {
        self.tokens
            .binary_search_by(|t| t.as_str().cmp(token))
            .ok()
            .map(|i| i as u32)
    }

    pub fn token(&self, index: u32) -> &str {
        &self.tokens[index as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Document frequency of the token at `index` in the training set.
    pub fn doc_freq(&self, index: u32) -> u32 {
        self.doc_freq[index as usize]
    }

    /// Two-column TSV (token, doc_freq) for inspection.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (token, df) in self.tokens.iter().zip(&self.doc_freq) {
            writeln!(w, "{token}\t{df}")?;
        }
        Ok(())
    }
}

/// Build the pruned vocabulary over training documents.
///
/// Document frequencies are reduced in parallel; the result is invariant
/// to document order.
pub fn build_vocabulary<D>(docs: &[D], min_df: u32) -> Result<Vocabulary, FeatureError>
where
    D: Borrow<TokenSeq> + Sync,
{
    if min_df == 0 {
        return Err(FeatureError::MinDfZero);
    }
    let df: HashMap<String, u32> = docs
        .par_iter()
        .fold(HashMap::new, |mut acc: HashMap<String, u32>, doc| {
            let unique: HashSet<&str> = doc.borrow().iter().collect();
            for token in unique {
                *acc.entry(token.to_string()).or_insert(0) += 1;
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (token, count) in b {
                *a.entry(token).or_insert(0) += count;
            }
            a
        });

    let mut kept: Vec<(String, u32)> = df.into_iter().filter(|(_, c)| *c >= min_df).collect();
    if kept.is_empty() {
        return Err(FeatureError::EmptyVocabulary { min_df });
    }
    kept.sort_by(|a, b| a.0.cmp(&b.0));
    let (tokens, doc_freq) = kept.into_iter().unzip();
    Ok(Vocabulary {
        tokens,
        doc_freq,
        min_df,
    })
}

/// Sparse non-negative token counts over a fixed vocabulary dimension.
///
/// Entries are (feature index, count) pairs sorted by index; only nonzero
/// counts are stored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CountVector {
    entries: Vec<(u32, u32)>,
    dim: usize,
}

impl CountVector {
    pub fn new(mut entries: Vec<(u32, u32)>, dim: usize) -> CountVector {
        entries.sort_unstable_by_key(|e| e.0);
        debug_assert!(entries.iter().all(|&(i, c)| (i as usize) < dim && c > 0));
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        CountVector { entries, dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Nonzero (feature, count) pairs in index order.
    pub fn entries(&self) -> &[(u32, u32)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, feature: u32) -> u32 {
        self.entries
            .binary_search_by_key(&feature, |e| e.0)
            .map(|i| self.entries[i].1)
            .unwrap_or(0)
    }

    /// Sum of all counts.
    pub fn total(&self) -> u64 {
        self.entries.iter().map(|&(_, c)| u64::from(c)).sum()
    }
}

/// Count in-vocabulary tokens; out-of-vocabulary tokens are dropped.
pub fn vectorize(doc: &TokenSeq, vocab: &Vocabulary) -> CountVector {
    let mut hits: Vec<u32> = doc.iter().filter_map(|t| vocab.index_of(t)).collect();
    hits.sort_unstable();
    let mut entries: Vec<(u32, u32)> = Vec::new();
    for idx in hits {
        match entries.last_mut() {
            Some((last, count)) if *last == idx => *count += 1,
            _ => entries.push((idx, 1)),
        }
    }
    CountVector {
        entries,
        dim: vocab.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(tokens: &[&str]) -> TokenSeq {
        TokenSeq::from_tokens(tokens.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn min_df_two_keeps_only_shared_tokens() {
        let docs = vec![seq(&["a", "b"]), seq(&["b", "c"])];
        let vocab = build_vocabulary(&docs, 2).unwrap();
        assert_eq!(vocab.tokens(), ["b"]);
        assert_eq!(vocab.index_of("b"), Some(0));
        assert_eq!(vocab.doc_freq(0), 2);
    }

    #[test]
    fn min_df_one_keeps_everything_in_lexicographic_order() {
        let docs = vec![seq(&["a", "b"]), seq(&["b", "c"])];
        let vocab = build_vocabulary(&docs, 1).unwrap();
        assert_eq!(vocab.tokens(), ["a", "b", "c"]);
        assert_eq!(vocab.index_of("a"), Some(0));
        assert_eq!(vocab.index_of("b"), Some(1));
        assert_eq!(vocab.index_of("c"), Some(2));
    }

    #[test]
    fn empty_corpus_yields_empty_vocabulary_error() {
        let docs: Vec<TokenSeq> = Vec::new();
        assert_eq!(
            build_vocabulary(&docs, 1).unwrap_err(),
            FeatureError::EmptyVocabulary { min_df: 1 }
        );
    }

    #[test]
    fn min_df_zero_is_rejected() {
        let docs = vec![seq(&["a"])];
        assert_eq!(
            build_vocabulary(&docs, 0).unwrap_err(),
            FeatureError::MinDfZero
        );
    }

    #[test]
    fn repeated_tokens_count_once_per_document() {
        let docs = vec![seq(&["a", "a", "a"]), seq(&["b"])];
        let vocab = build_vocabulary(&docs, 1).unwrap();
        assert_eq!(vocab.doc_freq(vocab.index_of("a").unwrap()), 1);
    }

    #[test]
    fn vectorize_counts_and_drops_oov() {
        let docs = vec![seq(&["a", "b"]), seq(&["b", "c"])];
        let vocab = build_vocabulary(&docs, 2).unwrap();
        let v = vectorize(&seq(&["b", "b", "z"]), &vocab);
        assert_eq!(v.entries(), [(0, 2)]);
        assert_eq!(v.get(0), 2);
        assert_eq!(v.dim(), 1);
    }

    #[test]
    fn vectorize_empty_doc_is_empty() {
        let docs = vec![seq(&["a"])];
        let vocab = build_vocabulary(&docs, 1).unwrap();
        let v = vectorize(&seq(&[]), &vocab);
        assert_eq!(v.nnz(), 0);
        assert_eq!(v.total(), 0);
    }

    #[test]
    fn six_distinct_tokens_have_unit_counts() {
        let doc = seq(&["interesting", "death", "hook", "play", "reliable", "better"]);
        let vocab = build_vocabulary(std::slice::from_ref(&doc), 1).unwrap();
        assert_eq!(vocab.len(), 6);
        let v = vectorize(&doc, &vocab);
        assert_eq!(v.nnz(), 6);
        assert!(v.entries().iter().all(|&(_, c)| c == 1));
    }

    #[test]
    fn tsv_dump_lists_token_and_doc_freq() {
        let docs = vec![seq(&["b", "a"]), seq(&["a"])];
        let vocab = build_vocabulary(&docs, 1).unwrap();
        let mut buf = Vec::new();
        vocab.write_tsv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a\t2\nb\t1\n");
    }

    proptest! {
        #[test]
        fn build_is_invariant_to_document_order(
            mut docs in proptest::collection::vec(
                proptest::collection::vec("[a-e]", 0..6).prop_map(|ts| seq(&ts.iter().map(String::as_str).collect::<Vec<_>>())),
                1..8
            ),
            df in 1u32..3
        ) {
            let forward = build_vocabulary(&docs, df);
            docs.reverse();
            let backward = build_vocabulary(&docs, df);
            prop_assert_eq!(forward, backward);
        }

        #[test]
        fn count_sum_is_bounded_by_doc_length(
            doc in proptest::collection::vec("[a-e]", 0..20),
            vocab_docs in proptest::collection::vec(proptest::collection::vec("[a-c]", 1..5), 1..4)
        ) {
            let doc = seq(&doc.iter().map(String::as_str).collect::<Vec<_>>());
            let vdocs: Vec<TokenSeq> = vocab_docs.iter()
                .map(|d| seq(&d.iter().map(String::as_str).collect::<Vec<_>>()))
                .collect();
            let vocab = build_vocabulary(&vdocs, 1).unwrap();
            let v = vectorize(&doc, &vocab);
            prop_assert!(v.total() <= doc.len() as u64);
            let all_in_vocab = doc.iter().all(|t| vocab.index_of(t).is_some());
            prop_assert_eq!(v.total() == doc.len() as u64, all_in_vocab);
        }
    }
}

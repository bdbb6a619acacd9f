//! Lexicon-conditioned bag-of-words models for review polarity.
//!
//! The pipeline streams book reviews out of XML dumps, normalizes them
//! into token sequences, rewrites each document under eleven
//! emotion/sentiment lexicon models, rebalances polarity classes, trains
//! an entropy-split random forest over sparse count vectors, and compares
//! the models with stratified 10-fold cross-validation.
//!
//! Modules follow the pipeline order:
//!
//! - [`lexicon`]: word–affect association file parsing and queries
//! - [`corpus`]: XML review extraction, polarity classes, NDJSON cache
//! - [`textnorm`]: text → lowercase token sequence
//! - [`represent`]: the eleven representation rewrites
//! - [`features`]: pruned vocabularies and sparse count vectors
//! - [`balance`]: natural / undersample / oversample regimes
//! - [`forest`]: the random-forest classifier
//! - [`evaluate`]: cross-validation harness, metrics, reports
//! - [`synth`]: planted-signal synthetic corpora for validation
//! - [`seed`]: labeled deterministic RNG streams

pub mod balance;
pub mod corpus;
pub mod evaluate;
pub mod features;
pub mod forest;
pub mod lexicon;
pub mod represent;
pub mod seed;
pub mod synth;
pub mod textnorm;

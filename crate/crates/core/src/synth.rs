//! Synthetic labeled corpora with planted affect-bearing marker words.
//!
//! Each class owns three groups of marker words — sentiment-only,
//! emotion-only, and both — so the representation models differ in how
//! much of the signal they can see. With probability `signal` a document
//! draws its markers from its own class; otherwise from a uniformly
//! random class. The best classifier reading marker identities alone
//! therefore scores `signal + (1 - signal) / 3`.
//!
//! Filler words are shared across classes and carry no signal beyond
//! their count; per-class filler-length ranges optionally plant a
//! document-length signal that only the generic-placeholder models can
//! exploit.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::corpus::{CacheRecord, PolarityClass};
use crate::lexicon::{Category, CategorySet, Lexicon};
use crate::seed::seeded_rng;

/// Marker visibility groups, by which models keep or rewrite them.
const GROUP_TAGS: [&str; 3] = ["s", "e", "b"];

/// Per-marker-slot probability of drawing each group:
/// sentiment-only, emotion-only, both.
const GROUP_WEIGHTS: [f64; 3] = [0.45, 0.30, 0.25];

#[derive(Debug, Clone)]
pub struct SynthSpec {
    /// Documents per class (negative, neutral, positive).
    pub class_sizes: [usize; 3],
    /// Probability that a document's markers come from its own class.
    pub signal: f64,
    /// Marker tokens planted per document.
    pub markers_per_doc: usize,
    /// Distinct marker words per class and visibility group.
    pub marker_words_per_group: usize,
    /// Distinct filler words shared by all classes.
    pub filler_vocab: usize,
    /// Inclusive filler-count range per class; identical ranges keep
    /// document length uninformative.
    pub filler_len: [(usize, usize); 3],
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(class_sizes: [usize; 3], signal: f64, seed: u64) -> SynthSpec {
        SynthSpec {
            class_sizes,
            signal,
            markers_per_doc: 2,
            marker_words_per_group: 4,
            filler_vocab: 400,
            filler_len: [(25, 45); 3],
            seed,
        }
    }

    /// Accuracy of the best classifier reading marker identities alone
    /// (assuming uninformative document lengths).
    pub fn bayes_accuracy(&self) -> f64 {
        self.signal + (1.0 - self.signal) / 3.0
    }

    /// Generate the corpus and its matching lexicon.
    pub fn generate(&self) -> SynthCorpus {
        assert!(
            (0.0..=1.0).contains(&self.signal),
            "signal must be in [0, 1]"
        );
        assert!(self.markers_per_doc > 0 && self.marker_words_per_group > 0);
        let mut rng = seeded_rng(self.seed);

        let marker_words: Vec<Vec<Vec<String>>> = PolarityClass::ALL
            .iter()
            .map(|class| {
                GROUP_TAGS
                    .iter()
                    .map(|tag| {
                        (0..self.marker_words_per_group)
                            .map(|i| format!("mk{}{}{}", class.name(), tag, i))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let fillers: Vec<String> = (0..self.filler_vocab)
            .map(|i| format!("fill{i:04}"))
            .collect();

        let mut records = Vec::new();
        for class in PolarityClass::ALL {
            for _ in 0..self.class_sizes[class.index()] {
                let marker_class = if rng.gen_bool(self.signal) {
                    class
                } else {
                    PolarityClass::from_index(rng.gen_range(0..3))
                };
                let mut words: Vec<String> = Vec::new();
                for _ in 0..self.markers_per_doc {
                    let group = pick_group(&mut rng);
                    let pool = &marker_words[marker_class.index()][group];
                    words.push(pool[rng.gen_range(0..pool.len())].clone());
                }
                let (lo, hi) = self.filler_len[class.index()];
                for _ in 0..rng.gen_range(lo..=hi) {
                    words.push(fillers[rng.gen_range(0..fillers.len())].clone());
                }
                words.shuffle(&mut rng);
                let rating = match class {
                    PolarityClass::Negative => rng.gen_range(1..=2),
                    PolarityClass::Neutral => 3,
                    PolarityClass::Positive => rng.gen_range(4..=5),
                };
                records.push(
                    CacheRecord::from_text(words.join(" "), rating)
                        .expect("generated ratings are in range"),
                );
            }
        }
        records.shuffle(&mut rng);

        SynthCorpus {
            records,
            lexicon_tsv: marker_lexicon_tsv(&marker_words),
        }
    }
}

fn pick_group<R: Rng>(rng: &mut R) -> usize {
    let roll: f64 = rng.gen();
    if roll < GROUP_WEIGHTS[0] {
        0
    } else if roll < GROUP_WEIGHTS[0] + GROUP_WEIGHTS[1] {
        1
    } else {
        2
    }
}

/// Category assignment per (class, group): sentiment-only markers get a
/// sentiment, emotion-only markers an emotion, both-markers one of each.
fn marker_categories(class: PolarityClass, group: usize) -> CategorySet {
    let (sentiment, emotion) = match class {
        PolarityClass::Negative => (Category::Negative, Category::Sadness),
        PolarityClass::Neutral => (Category::Positive, Category::Anticipation),
        PolarityClass::Positive => (Category::Positive, Category::Joy),
    };
    match group {
        0 => [sentiment].into_iter().collect(),
        1 => [emotion].into_iter().collect(),
        _ => [sentiment, emotion].into_iter().collect(),
    }
}

fn marker_lexicon_tsv(marker_words: &[Vec<Vec<String>>]) -> String {
    let mut out = String::new();
    for class in PolarityClass::ALL {
        for (group, words) in marker_words[class.index()].iter().enumerate() {
            let categories = marker_categories(class, group);
            for word in words {
                for category in Category::ALL {
                    out.push_str(&format!(
                        "{}\t{}\t{}\n",
                        word,
                        category.name(),
                        u8::from(categories.contains(category))
                    ));
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub records: Vec<CacheRecord>,
    /// TSV form of the planted lexicon, parseable by [`Lexicon::parse`].
    pub lexicon_tsv: String,
}

impl SynthCorpus {
    pub fn lexicon(&self) -> Lexicon {
        Lexicon::parse(self.lexicon_tsv.as_bytes()).expect("generated lexicon is well-formed")
    }
}

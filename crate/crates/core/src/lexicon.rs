//! Word–affect association lexicon: TSV parsing and category queries.
//!
//! The lexicon file carries one `word<TAB>category<TAB>flag` triple per
//! line, flag 0 or 1, over eight emotion categories and two sentiment
//! categories. A word is associated with a category iff some line flags
//! it with 1; a word whose flags are all 0 is equivalent to an absent
//! word and is not stored.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::represent::GENERIC_TOKEN;

/// The ten affect categories: eight emotions plus two sentiments.
///
/// Discriminants fix the canonical expansion order used whenever a word
/// is rewritten into its category names: emotions first, then sentiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Category {
    Anger = 0,
    Anticipation = 1,
    Disgust = 2,
    Fear = 3,
    Joy = 4,
    Sadness = 5,
    Surprise = 6,
    Trust = 7,
    Positive = 8,
    Negative = 9,
}

impl Category {
    /// All categories in canonical order.
    pub const ALL: [Category; 10] = [
        Category::Anger,
        Category::Anticipation,
        Category::Disgust,
        Category::Fear,
        Category::Joy,
        Category::Sadness,
        Category::Surprise,
        Category::Trust,
        Category::Positive,
        Category::Negative,
    ];

    /// Surface name as it appears in the lexicon file and in rewritten documents.
    pub fn name(self) -> &'static str {
        match self {
            Category::Anger => "anger",
            Category::Anticipation => "anticipation",
            Category::Disgust => "disgust",
            Category::Fear => "fear",
            Category::Joy => "joy",
            Category::Sadness => "sadness",
            Category::Surprise => "surprise",
            Category::Trust => "trust",
            Category::Positive => "positive",
            Category::Negative => "negative",
        }
    }

    /// Parse an English surface label.
    pub fn parse(label: &str) -> Option<Category> {
        Category::ALL.iter().copied().find(|c| c.name() == label)
    }

    pub fn is_sentiment(self) -> bool {
        matches!(self, Category::Positive | Category::Negative)
    }

    pub fn is_emotion(self) -> bool {
        !self.is_sentiment()
    }

    fn bit(self) -> u16 {
        1 << (self as u16)
    }
}

/// A set of categories, packed as a 10-bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct CategorySet(u16);

const SENTIMENT_BITS: u16 = (1 << (Category::Positive as u16)) | (1 << (Category::Negative as u16));
const EMOTION_BITS: u16 = 0x03ff & !SENTIMENT_BITS;

impl CategorySet {
    pub const EMPTY: CategorySet = CategorySet(0);

    pub fn insert(&mut self, c: Category) {
        self.0 |= c.bit();
    }

    pub fn remove(&mut self, c: Category) {
        self.0 &= !c.bit();
    }

    pub fn contains(self, c: Category) -> bool {
        self.0 & c.bit() != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Categories present in the set, in canonical order.
    pub fn iter(self) -> impl Iterator<Item = Category> {
        Category::ALL.into_iter().filter(move |c| self.contains(*c))
    }

    /// True iff the set intersects {positive, negative}.
    pub fn bears_sentiment(self) -> bool {
        self.0 & SENTIMENT_BITS != 0
    }

    /// True iff the set intersects the eight emotions.
    pub fn bears_emotion(self) -> bool {
        self.0 & EMOTION_BITS != 0
    }
}

impl FromIterator<Category> for CategorySet {
    fn from_iter<I: IntoIterator<Item = Category>>(iter: I) -> Self {
        let mut set = CategorySet::EMPTY;
        for c in iter {
            set.insert(c);
        }
        set
    }
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("line {line}: expected `word<TAB>category<TAB>flag` with flag 0 or 1")]
    MalformedLine { line: usize },
    #[error("line {line}: unknown category `{label}`")]
    UnknownCategory { line: usize, label: String },
    #[error("lexicon defines the reserved placeholder token `{0}`")]
    ReservedWord(&'static str),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Immutable word → category-set map parsed from the TSV format.
///
/// Keys are lowercase and whitespace-free; no stored entry has an empty
/// category set. Safe to share read-only across worker threads.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lexicon {
    entries: HashMap<String, CategorySet>,
    source_line_count: usize,
    duplicate_line_count: usize,
}

impl Lexicon {
    /// Lexicon with no entries; every token behaves as absent.
    pub fn empty() -> Lexicon {
        Lexicon::default()
    }

    /// Parse the TSV stream. Blank lines are ignored; LF and CRLF both work.
    pub fn parse<R: BufRead>(reader: R) -> Result<Lexicon, LexiconError> {
        Lexicon::parse_with_aliases(reader, &HashMap::new())
    }

    /// Parse with extra label aliases mapped onto the ten categories.
    pub fn parse_with_aliases<R: BufRead>(
        reader: R,
        aliases: &HashMap<String, Category>,
    ) -> Result<Lexicon, LexiconError> {
        struct Flags {
            set: CategorySet,
            seen: CategorySet,
        }
        let mut words: HashMap<String, Flags> = HashMap::new();
        let mut source_line_count = 0;
        let mut duplicate_line_count = 0;

        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            source_line_count += 1;

            let mut fields = line.split('\t');
            let (word, label, flag) =
                match (fields.next(), fields.next(), fields.next(), fields.next()) {
                    (Some(w), Some(c), Some(f), None) => (w, c, f),
                    _ => return Err(LexiconError::MalformedLine { line: line_no }),
                };
            let flag = match flag {
                "0" => false,
                "1" => true,
                _ => return Err(LexiconError::MalformedLine { line: line_no }),
            };
            if word.is_empty() || word.chars().any(char::is_whitespace) {
                return Err(LexiconError::MalformedLine { line: line_no });
            }
            let category = aliases
                .get(label)
                .copied()
                .or_else(|| Category::parse(label))
                .ok_or_else(|| LexiconError::UnknownCategory {
                    line: line_no,
                    label: label.to_string(),
                })?;

            let entry = words.entry(word.to_lowercase()).or_insert(Flags {
                set: CategorySet::EMPTY,
                seen: CategorySet::EMPTY,
            });
            if entry.seen.contains(category) {
                duplicate_line_count += 1;
            }
            entry.seen.insert(category);
            // Last occurrence of a (word, category) pair wins.
            if flag {
                entry.set.insert(category);
            } else {
                entry.set.remove(category);
            }
        }

        let entries: HashMap<String, CategorySet> = words
            .into_iter()
            .filter(|(_, f)| !f.set.is_empty())
            .map(|(w, f)| (w, f.set))
            .collect();
        if entries.contains_key(GENERIC_TOKEN) {
            return Err(LexiconError::ReservedWord(GENERIC_TOKEN));
        }
        Ok(Lexicon {
            entries,
            source_line_count,
            duplicate_line_count,
        })
    }

    /// Category set for a token; the empty set when the token is absent.
    pub fn categories(&self, token: &str) -> CategorySet {
        self.entries
            .get(token)
            .copied()
            .unwrap_or(CategorySet::EMPTY)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.entries.contains_key(token)
    }

    /// Number of words with a non-empty category set.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Non-blank data lines read during parsing.
    pub fn source_line_count(&self) -> usize {
        self.source_line_count
    }

    /// Lines that re-stated an already-seen (word, category) pair.
    pub fn duplicate_line_count(&self) -> usize {
        self.duplicate_line_count
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Write the canonical TSV form: all ten flags per word, words sorted.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let mut words: Vec<&String> = self.entries.keys().collect();
        words.sort();
        for word in words {
            let set = self.entries[word];
            for category in Category::ALL {
                writeln!(
                    w,
                    "{}\t{}\t{}",
                    word,
                    category.name(),
                    u8::from(set.contains(category))
                )?;
            }
        }
        Ok(())
    }

    /// The canonical TSV form as a string.
    pub fn to_tsv(&self) -> String {
        let mut buf = Vec::new();
        self.write_tsv(&mut buf).expect("write to Vec cannot fail");
        String::from_utf8(buf).expect("TSV output is UTF-8")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const ABANDON_FIXTURE: &str = "abandon\tanger\t0\n\
abandon\tanticipation\t0\n\
abandon\tdisgust\t0\n\
abandon\tfear\t1\n\
abandon\tjoy\t0\n\
abandon\tsadness\t1\n\
abandon\tsurprise\t0\n\
abandon\ttrust\t0\n\
abandon\tpositive\t0\n\
abandon\tnegative\t1\n";

    #[test]
    fn parses_word_with_three_categories() {
        let lex = Lexicon::parse(ABANDON_FIXTURE.as_bytes()).unwrap();
        assert_eq!(lex.len(), 1);
        let cs = lex.categories("abandon");
        let expected: CategorySet = [Category::Fear, Category::Sadness, Category::Negative]
            .into_iter()
            .collect();
        assert_eq!(cs, expected);
        assert!(cs.bears_sentiment());
        assert!(cs.bears_emotion());
    }

    #[test]
    fn empty_input_gives_empty_lexicon() {
        let lex = Lexicon::parse("".as_bytes()).unwrap();
        assert_eq!(lex.len(), 0);
        assert_eq!(lex.source_line_count(), 0);
    }

    #[test]
    fn all_zero_flags_equal_absence() {
        let lex = Lexicon::parse("zzz\tjoy\t0\nzzz\ttrust\t0\n".as_bytes()).unwrap();
        assert!(!lex.contains("zzz"));
        assert_eq!(lex.len(), 0);
        assert_eq!(lex.source_line_count(), 2);
    }

    #[test]
    fn absent_token_has_empty_set() {
        let lex = Lexicon::parse(ABANDON_FIXTURE.as_bytes()).unwrap();
        let cs = lex.categories("grisham");
        assert!(cs.is_empty());
        assert!(!cs.bears_sentiment());
        assert!(!cs.bears_emotion());
    }

    #[test]
    fn sentiment_only_set() {
        let cs: CategorySet = [Category::Positive].into_iter().collect();
        assert!(cs.bears_sentiment());
        assert!(!cs.bears_emotion());
    }

    #[test]
    fn malformed_arity_is_reported_with_line_number() {
        let err = Lexicon::parse("good\tjoy\t1\nbad joy 1\n".as_bytes()).unwrap_err();
        match err {
            LexiconError::MalformedLine { line } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn non_binary_flag_is_malformed() {
        let err = Lexicon::parse("word\tjoy\t2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, LexiconError::MalformedLine { line: 1 }));
    }

    #[test]
    fn unknown_category_is_reported() {
        let err = Lexicon::parse("word\tbliss\t1\n".as_bytes()).unwrap_err();
        match err {
            LexiconError::UnknownCategory { line, label } => {
                assert_eq!(line, 1);
                assert_eq!(label, "bliss");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn alias_table_extends_labels() {
        let mut aliases = HashMap::new();
        aliases.insert("positif".to_string(), Category::Positive);
        let lex = Lexicon::parse_with_aliases("bon\tpositif\t1\n".as_bytes(), &aliases).unwrap();
        assert!(lex.categories("bon").contains(Category::Positive));
    }

    #[test]
    fn duplicate_lines_last_wins_and_are_counted() {
        let input = "word\tjoy\t1\nword\tjoy\t0\nword\ttrust\t1\n";
        let lex = Lexicon::parse(input.as_bytes()).unwrap();
        assert_eq!(lex.duplicate_line_count(), 1);
        let cs = lex.categories("word");
        assert!(!cs.contains(Category::Joy));
        assert!(cs.contains(Category::Trust));
    }

    #[test]
    fn words_are_lowercased_on_parse() {
        let lex = Lexicon::parse("LOUD\tanger\t1\n".as_bytes()).unwrap();
        assert!(lex.contains("loud"));
        assert!(!lex.contains("LOUD"));
    }

    #[test]
    fn crlf_lines_parse() {
        let lex = Lexicon::parse("calm\ttrust\t1\r\n\r\ncalm\tpositive\t1\r\n".as_bytes()).unwrap();
        assert_eq!(lex.categories("calm").len(), 2);
    }

    #[test]
    fn reserved_placeholder_is_rejected() {
        let err = Lexicon::parse("non_emotion\tjoy\t1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, LexiconError::ReservedWord(_)));
    }

    #[test]
    fn tsv_round_trip_preserves_entries() {
        let input = "abandon\tfear\t1\nabandon\tsadness\t1\nabandon\tnegative\t1\nhook\tjoy\t1\nhook\tpositive\t1\n";
        let lex = Lexicon::parse(input.as_bytes()).unwrap();
        let reparsed = Lexicon::parse(lex.to_tsv().as_bytes()).unwrap();
        assert_eq!(lex.entries, reparsed.entries);
    }

    fn arbitrary_category_set() -> impl Strategy<Value = CategorySet> {
        (0u16..1024).prop_map(CategorySet)
    }

    proptest! {
        #[test]
        fn affect_queries_cover_exactly_nonempty_sets(cs in arbitrary_category_set()) {
            prop_assert_eq!(cs.bears_sentiment() || cs.bears_emotion(), !cs.is_empty());
        }

        #[test]
        fn round_trip_random_lexicons(
            words in proptest::collection::btree_map("[a-z]{1,8}", 1u16..1024, 0..20)
        ) {
            let mut lex = Lexicon::default();
            for (w, bits) in words {
                lex.entries.insert(w, CategorySet(bits));
            }
            let reparsed = Lexicon::parse(lex.to_tsv().as_bytes()).unwrap();
            prop_assert_eq!(&lex.entries, &reparsed.entries);
        }
    }
}

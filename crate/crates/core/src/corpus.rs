//! Review corpus ingestion: streaming XML extraction, star-rating polarity
//! classes, labeled document sets, and a newline-delimited JSON cache.
//!
//! The XML reader is event-based and keeps one review resident at a time,
//! so corpora far larger than memory stream through. Reviews lacking a
//! content element or a parseable rating in 1..=5 are skipped and counted
//! rather than aborting the file.

use std::io::{self, BufRead, Write};

use quick_xml::events::Event;
use quick_xml::Reader;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textnorm::{normalize, TokenSeq};

/// Three-way polarity derived from a 1–5 star rating.
///
/// The order Negative < Neutral < Positive is load-bearing: reports sort by
/// it and prediction ties resolve toward the smaller value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolarityClass {
    Negative,
    Neutral,
    Positive,
}

impl PolarityClass {
    pub const ALL: [PolarityClass; 3] = [
        PolarityClass::Negative,
        PolarityClass::Neutral,
        PolarityClass::Positive,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> PolarityClass {
        PolarityClass::ALL[i]
    }

    pub fn name(self) -> &'static str {
        match self {
            PolarityClass::Negative => "negative",
            PolarityClass::Neutral => "neutral",
            PolarityClass::Positive => "positive",
        }
    }
}

impl std::fmt::Display for PolarityClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PolarityClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PolarityClass::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown polarity class `{s}`"))
    }
}

/// Map a star rating onto its polarity class: 1,2 negative; 3 neutral; 4,5 positive.
pub fn rating_to_class(rating: u8) -> Result<PolarityClass, CorpusError> {
    match rating {
        1 | 2 => Ok(PolarityClass::Negative),
        3 => Ok(PolarityClass::Neutral),
        4 | 5 => Ok(PolarityClass::Positive),
        other => Err(CorpusError::OutOfRange(other)),
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("xml syntax error at byte {position} in {source_id}: {source}")]
    XmlSyntax {
        position: u64,
        source_id: String,
        #[source]
        source: quick_xml::Error,
    },
    #[error("rating {0} outside 1..=5")]
    OutOfRange(u8),
    #[error("cache line {line}: {reason}")]
    Cache { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One review extracted from the XML corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawReview {
    pub content: String,
    /// Star rating, always in 1..=5.
    pub rating: u8,
    /// File label plus review-element ordinal, for provenance.
    pub source_id: String,
}

/// Element names the reader looks for; the defaults match the corpus dumps.
#[derive(Debug, Clone)]
pub struct TagConfig {
    pub review: String,
    pub content: String,
    pub rating: String,
}

impl Default for TagConfig {
    fn default() -> Self {
        TagConfig {
            review: "review".to_string(),
            content: "content".to_string(),
            rating: "rating".to_string(),
        }
    }
}

/// Streaming review extractor over one XML file.
///
/// Yields reviews in document order. A syntax error aborts the file (the
/// iterator fuses after yielding it); unusable reviews only bump the skip
/// counter. `emitted() + skipped() == review_elements()` always holds.
pub struct ReviewReader<R: BufRead> {
    reader: Reader<R>,
    tags: TagConfig,
    source: String,
    buf: Vec<u8>,
    emitted: u64,
    skipped: u64,
    review_elements: u64,
    failed: bool,
}

impl<R: BufRead> ReviewReader<R> {
    pub fn new(input: R, source: impl Into<String>) -> Self {
        ReviewReader::with_tags(input, source, TagConfig::default())
    }

    pub fn with_tags(input: R, source: impl Into<String>, tags: TagConfig) -> Self {
        ReviewReader {
            reader: Reader::from_reader(input),
            tags,
            source: source.into(),
            buf: Vec::new(),
            emitted: 0,
            skipped: 0,
            review_elements: 0,
            failed: false,
        }
    }

    pub fn emitted(&self) -> u64 {
        self.emitted
    }

    /// Reviews dropped for a missing content element or an unusable rating.
    pub fn skipped(&self) -> u64 {
        self.skipped
    }

    /// Review elements encountered so far, emitted or skipped.
    pub fn review_elements(&self) -> u64 {
        self.review_elements
    }

    fn syntax_error(&mut self, source: quick_xml::Error) -> CorpusError {
        self.failed = true;
        CorpusError::XmlSyntax {
            position: self.reader.buffer_position(),
            source_id: self.source.clone(),
            source,
        }
    }

    /// Flattened text of the current element: nested markup contributes
    /// only its character data.
    fn read_flat_text(&mut self, tag: &[u8]) -> Result<String, CorpusError> {
        let mut text = String::new();
        let mut depth = 0u32;
        loop {
            self.buf.clear();
            match self.reader.read_event_into(&mut self.buf) {
                Err(e) => return Err(self.syntax_error(e)),
                Ok(Event::Start(ref s)) if s.local_name().as_ref() == tag => depth += 1,
                Ok(Event::End(ref e)) if e.local_name().as_ref() == tag => {
                    if depth == 0 {
                        return Ok(text);
                    }
                    depth -= 1;
                }
                Ok(Event::Text(t)) => match t.unescape() {
                    Ok(s) => text.push_str(&s),
                    Err(e) => return Err(self.syntax_error(e)),
                },
                Ok(Event::CData(t)) => text.push_str(&String::from_utf8_lossy(t.as_ref())),
                Ok(Event::Eof) => {
                    return Err(self.syntax_error(quick_xml::Error::IllFormed(
                        quick_xml::errors::IllFormedError::MissingEndTag(
                            String::from_utf8_lossy(tag).into_owned(),
                        ),
                    )))
                }
                Ok(_) => {}
            }
        }
    }

    /// Consume events until the review element closes; returns the review
    /// if it carries usable content and rating.
    fn read_review_body(&mut self, ordinal: u64) -> Result<Option<RawReview>, CorpusError> {
        let review_tag = self.tags.review.clone().into_bytes();
        let content_tag = self.tags.content.clone().into_bytes();
        let rating_tag = self.tags.rating.clone().into_bytes();
        let mut content: Option<String> = None;
        let mut rating_text: Option<String> = None;
        let mut depth = 0u32;
        loop {
            self.buf.clear();
            match self.reader.read_event_into(&mut self.buf) {
                Err(e) => return Err(self.syntax_error(e)),
                Ok(Event::Start(ref s)) => {
                    let name = s.local_name().as_ref().to_vec();
                    if name == review_tag {
                        depth += 1;
                    } else if name == content_tag {
                        content = Some(self.read_flat_text(&content_tag)?);
                    } else if name == rating_tag {
                        rating_text = Some(self.read_flat_text(&rating_tag)?);
                    }
                }
                Ok(Event::Empty(ref s)) => {
                    let local = s.local_name();
                    let name = local.as_ref();
                    if name == content_tag.as_slice() {
                        content = Some(String::new());
                    } else if name == rating_tag.as_slice() {
                        rating_text = Some(String::new());
                    }
                }
                Ok(Event::End(ref e)) if e.local_name().as_ref() == review_tag => {
                    if depth > 0 {
                        depth -= 1;
                        continue;
                    }
                    let rating = rating_text.as_deref().and_then(parse_rating);
                    return Ok(match (content, rating) {
                        (Some(content), Some(rating)) => Some(RawReview {
                            content,
                            rating,
                            source_id: format!("{}#{}", self.source, ordinal),
                        }),
                        _ => None,
                    });
                }
                Ok(Event::Eof) => {
                    return Err(self.syntax_error(quick_xml::Error::IllFormed(
                        quick_xml::errors::IllFormedError::MissingEndTag(self.tags.review.clone()),
                    )))
                }
                Ok(_) => {}
            }
        }
    }
}

impl<R: BufRead> Iterator for ReviewReader<R> {
    type Item = Result<RawReview, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            self.buf.clear();
            match self.reader.read_event_into(&mut self.buf) {
                Err(e) => return Some(Err(self.syntax_error(e))),
                Ok(Event::Eof) => return None,
                Ok(Event::Start(ref s))
                    if s.local_name().as_ref() == self.tags.review.as_bytes() =>
                {
                    let ordinal = self.review_elements;
                    self.review_elements += 1;
                    match self.read_review_body(ordinal) {
                        Err(e) => return Some(Err(e)),
                        Ok(Some(review)) => {
                            self.emitted += 1;
                            return Some(Ok(review));
                        }
                        Ok(None) => {
                            self.skipped += 1;
                        }
                    }
                }
                Ok(_) => {}
            }
        }
    }
}

/// Stream reviews out of an XML byte stream with the default tag names.
pub fn parse_reviews<R: BufRead>(input: R, source: impl Into<String>) -> ReviewReader<R> {
    ReviewReader::new(input, source)
}

/// Accept integers 1..=5, or decimals exactly representable as one ("4.0").
fn parse_rating(text: &str) -> Option<u8> {
    let text = text.trim();
    if let Ok(v) = text.parse::<i64>() {
        return (1..=5).contains(&v).then_some(v as u8);
    }
    if let Ok(f) = text.parse::<f64>() {
        if f.fract() == 0.0 && (1.0..=5.0).contains(&f) {
            return Some(f as u8);
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Labeled sets
// ---------------------------------------------------------------------------

/// A sequence of labeled items (documents, indices, anything).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabeledSet<T> {
    items: Vec<(T, PolarityClass)>,
}

impl<T> LabeledSet<T> {
    pub fn new(items: Vec<(T, PolarityClass)>) -> LabeledSet<T> {
        LabeledSet { items }
    }

    pub fn items(&self) -> &[(T, PolarityClass)] {
        &self.items
    }

    pub fn into_items(self) -> Vec<(T, PolarityClass)> {
        self.items
    }

    pub fn push(&mut self, item: T, class: PolarityClass) {
        self.items.push((item, class));
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(T, PolarityClass)> {
        self.items.iter()
    }

    /// Item count per class, indexed by `PolarityClass::index`.
    pub fn class_counts(&self) -> [usize; 3] {
        let mut counts = [0usize; 3];
        for (_, class) in &self.items {
            counts[class.index()] += 1;
        }
        counts
    }

    pub fn class_distribution(&self) -> ClassDistribution {
        ClassDistribution::from_counts(self.class_counts())
    }
}

/// Per-class counts and proportions; proportions are 0 for an empty set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassDistribution {
    pub counts: [usize; 3],
    pub proportions: [f64; 3],
}

impl ClassDistribution {
    pub fn from_counts(counts: [usize; 3]) -> ClassDistribution {
        let total: usize = counts.iter().sum();
        let proportions = if total == 0 {
            [0.0; 3]
        } else {
            [
                counts[0] as f64 / total as f64,
                counts[1] as f64 / total as f64,
                counts[2] as f64 / total as f64,
            ]
        };
        ClassDistribution {
            counts,
            proportions,
        }
    }

    pub fn count(&self, class: PolarityClass) -> usize {
        self.counts[class.index()]
    }

    pub fn proportion(&self, class: PolarityClass) -> f64 {
        self.proportions[class.index()]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

// ---------------------------------------------------------------------------
// NDJSON cache
// ---------------------------------------------------------------------------

/// One cached document: raw text from ingestion, or a pre-tokenized
/// sequence written by the transform stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheRecord {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<String>>,
    pub rating: u8,
    pub class: PolarityClass,
}

impl CacheRecord {
    pub fn from_raw(review: &RawReview) -> Result<CacheRecord, CorpusError> {
        Ok(CacheRecord {
            text: Some(review.content.clone()),
            tokens: None,
            rating: review.rating,
            class: rating_to_class(review.rating)?,
        })
    }

    pub fn from_text(text: String, rating: u8) -> Result<CacheRecord, CorpusError> {
        Ok(CacheRecord {
            text: Some(text),
            tokens: None,
            rating,
            class: rating_to_class(rating)?,
        })
    }

    pub fn from_tokens(tokens: Vec<String>, rating: u8) -> Result<CacheRecord, CorpusError> {
        Ok(CacheRecord {
            text: None,
            tokens: Some(tokens),
            rating,
            class: rating_to_class(rating)?,
        })
    }

    /// The document as a token sequence: pre-tokenized records are taken
    /// verbatim, raw text goes through [`normalize`].
    pub fn to_token_seq(&self) -> TokenSeq {
        match &self.tokens {
            Some(tokens) => TokenSeq::from_tokens(tokens.clone()),
            None => normalize(self.text.as_deref().unwrap_or("")),
        }
    }
}

/// Write records as newline-delimited JSON.
pub fn write_cache<'a, W, I>(mut w: W, records: I) -> io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a CacheRecord>,
{
    for record in records {
        serde_json::to_writer(&mut w, record)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Read an NDJSON cache, validating ratings and class consistency.
pub fn read_cache<R: BufRead>(r: R) -> Result<Vec<CacheRecord>, CorpusError> {
    let mut records = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: CacheRecord = serde_json::from_str(&line).map_err(|e| CorpusError::Cache {
            line: line_no,
            reason: e.to_string(),
        })?;
        if record.text.is_none() && record.tokens.is_none() {
            return Err(CorpusError::Cache {
                line: line_no,
                reason: "record has neither text nor tokens".to_string(),
            });
        }
        let derived = rating_to_class(record.rating).map_err(|e| CorpusError::Cache {
            line: line_no,
            reason: e.to_string(),
        })?;
        if derived != record.class {
            return Err(CorpusError::Cache {
                line: line_no,
                reason: format!(
                    "class `{}` does not match rating {}",
                    record.class, record.rating
                ),
            });
        }
        records.push(record);
    }
    Ok(records)
}

/// Load a cache as normalized labeled documents.
pub fn read_labeled_docs<R: BufRead>(r: R) -> Result<LabeledSet<TokenSeq>, CorpusError> {
    let records = read_cache(r)?;
    Ok(LabeledSet::new(
        records
            .iter()
            .map(|rec| (rec.to_token_seq(), rec.class))
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    const GRISHAM_SNIPPET: &str = r#"<reviews>
  <review>
    <content>Interesting Grisham tale of a lawyer that takes millions of dollars from his firm after faking his own death.</content>
    <rating>4</rating>
  </review>
</reviews>"#;

    #[test]
    fn extracts_content_and_rating() {
        let mut reader = parse_reviews(GRISHAM_SNIPPET.as_bytes(), "fixture.xml");
        let review = reader.next().unwrap().unwrap();
        assert!(review.content.starts_with("Interesting Grisham tale"));
        assert_eq!(review.rating, 4);
        assert_eq!(review.source_id, "fixture.xml#0");
        assert!(reader.next().is_none());
        assert_eq!(reader.emitted(), 1);
        assert_eq!(reader.skipped(), 0);
    }

    #[test]
    fn no_review_elements_means_empty_stream() {
        let mut reader = parse_reviews("<books><book/></books>".as_bytes(), "f");
        assert!(reader.next().is_none());
        assert_eq!(reader.review_elements(), 0);
        assert_eq!(reader.skipped(), 0);
    }

    #[test]
    fn out_of_range_rating_is_skipped_and_counted() {
        let xml = "<r><review><content>x</content><rating>6</rating></review></r>";
        let mut reader = parse_reviews(xml.as_bytes(), "f");
        assert!(reader.next().is_none());
        assert_eq!(reader.skipped(), 1);
        assert_eq!(reader.review_elements(), 1);
    }

    #[test]
    fn integral_decimal_rating_is_accepted() {
        let xml = "<r><review><content>x</content><rating>4.0</rating></review></r>\n";
        let mut reader = parse_reviews(xml.as_bytes(), "f");
        assert_eq!(reader.next().unwrap().unwrap().rating, 4);
    }

    #[test]
    fn fractional_rating_is_skipped() {
        let xml = "<r><review><content>x</content><rating>4.5</rating></review></r>";
        let mut reader = parse_reviews(xml.as_bytes(), "f");
        assert!(reader.next().is_none());
        assert_eq!(reader.skipped(), 1);
    }

    #[test]
    fn missing_content_is_skipped() {
        let xml = "<r><review><rating>4</rating></review></r>";
        let mut reader = parse_reviews(xml.as_bytes(), "f");
        assert!(reader.next().is_none());
        assert_eq!(reader.skipped(), 1);
    }

    #[test]
    fn nested_markup_in_content_is_flattened() {
        let xml =
            "<r><review><content>good <b>bold</b> tale</content><rating>5</rating></review></r>";
        let mut reader = parse_reviews(xml.as_bytes(), "f");
        assert_eq!(reader.next().unwrap().unwrap().content, "good bold tale");
    }

    #[test]
    fn entities_are_unescaped() {
        let xml = "<r><review><content>cats &amp; dogs</content><rating>3</rating></review></r>";
        let mut reader = parse_reviews(xml.as_bytes(), "f");
        assert_eq!(reader.next().unwrap().unwrap().content, "cats & dogs");
    }

    #[test]
    fn malformed_xml_aborts_the_file() {
        let xml = "<r><review><content>x</content></wrong></review></r>";
        let mut reader = parse_reviews(xml.as_bytes(), "f");
        let err = reader.next().unwrap().unwrap_err();
        assert!(matches!(err, CorpusError::XmlSyntax { .. }));
        assert!(reader.next().is_none(), "reader fuses after a syntax error");
    }

    #[test]
    fn emitted_plus_skipped_equals_review_elements() {
        let xml = "<r>\
            <review><content>a</content><rating>1</rating></review>\
            <review><rating>2</rating></review>\
            <review><content>c</content><rating>9</rating></review>\
            <review><content>d</content><rating>5</rating></review>\
            </r>";
        let mut reader = parse_reviews(xml.as_bytes(), "f");
        let emitted = reader.by_ref().filter_map(Result::ok).count() as u64;
        assert_eq!(emitted, reader.emitted());
        assert_eq!(
            reader.emitted() + reader.skipped(),
            reader.review_elements()
        );
        assert_eq!(reader.review_elements(), 4);
    }

    #[test]
    fn custom_tag_names() {
        let xml = "<dump><rev><body>text</body><stars>2</stars></rev></dump>";
        let tags = TagConfig {
            review: "rev".to_string(),
            content: "body".to_string(),
            rating: "stars".to_string(),
        };
        let mut reader = ReviewReader::with_tags(xml.as_bytes(), "f", tags);
        let review = reader.next().unwrap().unwrap();
        assert_eq!(review.content, "text");
        assert_eq!(review.rating, 2);
    }

    #[test]
    fn rating_class_mapping_is_total_on_range() {
        assert_eq!(rating_to_class(1).unwrap(), PolarityClass::Negative);
        assert_eq!(rating_to_class(2).unwrap(), PolarityClass::Negative);
        assert_eq!(rating_to_class(3).unwrap(), PolarityClass::Neutral);
        assert_eq!(rating_to_class(4).unwrap(), PolarityClass::Positive);
        assert_eq!(rating_to_class(5).unwrap(), PolarityClass::Positive);
        assert!(matches!(
            rating_to_class(0),
            Err(CorpusError::OutOfRange(0))
        ));
        assert!(matches!(
            rating_to_class(6),
            Err(CorpusError::OutOfRange(6))
        ));
    }

    fn set_with_counts(neg: usize, neu: usize, pos: usize) -> LabeledSet<usize> {
        let mut items = Vec::new();
        for (count, class) in [
            (neg, PolarityClass::Negative),
            (neu, PolarityClass::Neutral),
            (pos, PolarityClass::Positive),
        ] {
            for _ in 0..count {
                items.push((items.len(), class));
            }
        }
        LabeledSet::new(items)
    }

    #[test]
    fn distribution_matches_the_reported_proportions() {
        let ds = set_with_counts(13, 9, 78);
        let dist = ds.class_distribution();
        assert_eq!(dist.counts, [13, 9, 78]);
        assert!((dist.proportion(PolarityClass::Negative) - 0.13).abs() < 1e-12);
        assert!((dist.proportion(PolarityClass::Neutral) - 0.09).abs() < 1e-12);
        assert!((dist.proportion(PolarityClass::Positive) - 0.78).abs() < 1e-12);
        let sum: f64 = dist.proportions.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_class_distribution_is_one() {
        let ds = set_with_counts(0, 0, 5);
        assert_eq!(
            ds.class_distribution().proportion(PolarityClass::Positive),
            1.0
        );
    }

    #[test]
    fn empty_distribution_is_all_zero() {
        let ds: LabeledSet<usize> = LabeledSet::new(Vec::new());
        let dist = ds.class_distribution();
        assert_eq!(dist.counts, [0, 0, 0]);
        assert_eq!(dist.proportions, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn cache_round_trip() {
        let records = vec![
            CacheRecord::from_text("Great book".to_string(), 5).unwrap(),
            CacheRecord::from_tokens(vec!["non_emotion".to_string(), "joy".to_string()], 3)
                .unwrap(),
        ];
        let mut buf = Vec::new();
        write_cache(&mut buf, &records).unwrap();
        let back = read_cache(buf.as_slice()).unwrap();
        assert_eq!(records, back);
        // Pre-tokenized records bypass normalization.
        assert_eq!(back[1].to_token_seq().tokens(), ["non_emotion", "joy"]);
    }

    #[test]
    fn cache_rejects_mismatched_class() {
        let line = r#"{"text":"x","rating":5,"class":"negative"}"#;
        let err = read_cache(line.as_bytes()).unwrap_err();
        assert!(matches!(err, CorpusError::Cache { line: 1, .. }));
    }

    #[test]
    fn cache_rejects_invalid_rating() {
        let line = r#"{"text":"x","rating":7,"class":"positive"}"#;
        assert!(read_cache(line.as_bytes()).is_err());
    }
}

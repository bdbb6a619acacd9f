//! The eleven lexicon-conditioned rewrites of a normalized token sequence.
//!
//! Each model either filters tokens by whether they bear affect (emotion
//! and/or sentiment categories in the lexicon), substitutes a generic
//! placeholder for the non-affect ones, or replaces affect words with the
//! names of their categories. The baseline keeps every word; its mirror
//! drops exactly the affect words, so the two partition the document.

use serde::{Deserialize, Serialize};

use crate::lexicon::{Category, CategorySet, Lexicon};
use crate::textnorm::TokenSeq;

/// Placeholder substituted for non-affect words by the generic models.
///
/// Must never collide with a lexicon word; lexicon parsing rejects it.
pub const GENERIC_TOKEN: &str = "non_emotion";

/// The eleven representation models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    /// Every word of the review, unchanged.
    #[serde(rename = "m")]
    Words,
    /// Only words bearing an emotion or a sentiment.
    #[serde(rename = "es")]
    Affect,
    /// Only words bearing a sentiment.
    #[serde(rename = "s")]
    Sentiment,
    /// Only words bearing an emotion.
    #[serde(rename = "e")]
    Emotion,
    /// Affect words kept, every other word replaced by the placeholder.
    #[serde(rename = "es+g")]
    AffectGeneric,
    /// Sentiment words kept, every other word replaced by the placeholder.
    #[serde(rename = "s+g")]
    SentimentGeneric,
    /// Emotion words kept, every other word replaced by the placeholder.
    #[serde(rename = "e+g")]
    EmotionGeneric,
    /// Affect words replaced by all their category names, other words kept.
    #[serde(rename = "ces+m")]
    AffectCategories,
    /// Sentiment words replaced by their sentiment category names, other words kept.
    #[serde(rename = "cs+m")]
    SentimentCategories,
    /// Emotion words replaced by their emotion category names, other words kept.
    #[serde(rename = "ce+m")]
    EmotionCategories,
    /// Affect words deleted, every other word kept.
    #[serde(rename = "m-es")]
    WordsMinusAffect,
}

impl ModelKind {
    pub const ALL: [ModelKind; 11] = [
        ModelKind::Words,
        ModelKind::Affect,
        ModelKind::Sentiment,
        ModelKind::Emotion,
        ModelKind::AffectGeneric,
        ModelKind::SentimentGeneric,
        ModelKind::EmotionGeneric,
        ModelKind::AffectCategories,
        ModelKind::SentimentCategories,
        ModelKind::EmotionCategories,
        ModelKind::WordsMinusAffect,
    ];

    /// Short flag used on the command line and in reports.
    pub fn flag(self) -> &'static str {
        match self {
            ModelKind::Words => "m",
            ModelKind::Affect => "es",
            ModelKind::Sentiment => "s",
            ModelKind::Emotion => "e",
            ModelKind::AffectGeneric => "es+g",
            ModelKind::SentimentGeneric => "s+g",
            ModelKind::EmotionGeneric => "e+g",
            ModelKind::AffectCategories => "ces+m",
            ModelKind::SentimentCategories => "cs+m",
            ModelKind::EmotionCategories => "ce+m",
            ModelKind::WordsMinusAffect => "m-es",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.flag())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelKind::ALL
            .into_iter()
            .find(|m| m.flag() == s)
            .ok_or_else(|| format!("unknown model `{s}` (expected one of m, es, s, e, es+g, s+g, e+g, ces+m, cs+m, ce+m, m-es)"))
    }
}

/// Which categories a category rewrite emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CategoryFilter {
    All,
    SentimentsOnly,
    EmotionsOnly,
}

/// Category surface names from the set, filtered and in canonical order.
pub fn expand_categories(cs: CategorySet, filter: CategoryFilter) -> Vec<&'static str> {
    cs.iter()
        .filter(|c| match filter {
            CategoryFilter::All => true,
            CategoryFilter::SentimentsOnly => c.is_sentiment(),
            CategoryFilter::EmotionsOnly => c.is_emotion(),
        })
        .map(Category::name)
        .collect()
}

/// Apply one representation model to a normalized document.
///
/// Surviving and emitted tokens follow document order; category expansions
/// of a single word are emitted in canonical category order.
pub fn transform(doc: &TokenSeq, lex: &Lexicon, kind: ModelKind) -> TokenSeq {
    let mut out: Vec<String> = Vec::with_capacity(doc.len());
    for word in doc.iter() {
        let cs = lex.categories(word);
        let affect = !cs.is_empty();
        let sentiment = cs.bears_sentiment();
        let emotion = cs.bears_emotion();
        match kind {
            ModelKind::Words => out.push(word.to_string()),
            ModelKind::Affect => {
                if affect {
                    out.push(word.to_string());
                }
            }
            ModelKind::Sentiment => {
                if sentiment {
                    out.push(word.to_string());
                }
            }
            ModelKind::Emotion => {
                if emotion {
                    out.push(word.to_string());
                }
            }
            ModelKind::AffectGeneric => {
                out.push(if affect {
                    word.to_string()
                } else {
                    GENERIC_TOKEN.to_string()
                });
            }
            ModelKind::SentimentGeneric => {
                out.push(if sentiment {
                    word.to_string()
                } else {
                    GENERIC_TOKEN.to_string()
                });
            }
            ModelKind::EmotionGeneric => {
                out.push(if emotion {
                    word.to_string()
                } else {
                    GENERIC_TOKEN.to_string()
                });
            }
            ModelKind::AffectCategories => {
                if affect {
                    out.extend(
                        expand_categories(cs, CategoryFilter::All)
                            .into_iter()
                            .map(String::from),
                    );
                } else {
                    out.push(word.to_string());
                }
            }
            ModelKind::SentimentCategories => {
                if sentiment {
                    out.extend(
                        expand_categories(cs, CategoryFilter::SentimentsOnly)
                            .into_iter()
                            .map(String::from),
                    );
                } else {
                    out.push(word.to_string());
                }
            }
            ModelKind::EmotionCategories => {
                if emotion {
                    out.extend(
                        expand_categories(cs, CategoryFilter::EmotionsOnly)
                            .into_iter()
                            .map(String::from),
                    );
                } else {
                    out.push(word.to_string());
                }
            }
            ModelKind::WordsMinusAffect => {
                if !affect {
                    out.push(word.to_string());
                }
            }
        }
    }
    TokenSeq::from_tokens(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textnorm::normalize;

    /// The worked example: six of its words carry affect categories.
    pub const REVIEW: &str = "Interesting Grisham tale of a lawyer that takes millions of \
dollars from his firm after faking his own death. Grisham usually is able to hook his \
readers early and ,in this case, doesn't play his hand to soon. The usually reliable \
Frank Mueller makes this story even an even better bet on Audiobook.";

    pub const MINI_LEXICON: &str = "interesting\tpositive\t1\n\
death\tanger\t1\ndeath\tsadness\t1\ndeath\tfear\t1\ndeath\tnegative\t1\n\
hook\tpositive\t1\nhook\tjoy\t1\n\
play\tpositive\t1\n\
reliable\ttrust\t1\nreliable\tpositive\t1\n\
better\tpositive\t1\nbetter\tjoy\t1\n";

    fn mini_lex() -> Lexicon {
        Lexicon::parse(MINI_LEXICON.as_bytes()).unwrap()
    }

    fn run(kind: ModelKind) -> String {
        transform(&normalize(REVIEW), &mini_lex(), kind).join(" ")
    }

    #[test]
    fn words_model_is_identity_on_normalized_text() {
        assert_eq!(
            run(ModelKind::Words),
            "interesting grisham tale of a lawyer that takes millions of dollars from his \
firm after faking his own death grisham usually is able to hook his readers early and in \
this case doesn't play his hand to soon the usually reliable frank mueller makes this \
story even an even better bet on audiobook"
        );
    }

    #[test]
    fn affect_model_keeps_the_six_lexicon_words() {
        assert_eq!(
            run(ModelKind::Affect),
            "interesting death hook play reliable better"
        );
    }

    #[test]
    fn sentiment_model_coincides_with_affect_on_this_lexicon() {
        assert_eq!(run(ModelKind::Sentiment), run(ModelKind::Affect));
    }

    #[test]
    fn emotion_model_drops_sentiment_only_words() {
        assert_eq!(run(ModelKind::Emotion), "death hook reliable better");
    }

    #[test]
    fn words_minus_affect_removes_exactly_the_lexicon_words() {
        assert_eq!(
            run(ModelKind::WordsMinusAffect),
            "grisham tale of a lawyer that takes millions of dollars from his firm after \
faking his own grisham usually is able to his readers early and in this case doesn't his \
hand to soon the usually frank mueller makes this story even an even bet on audiobook"
        );
    }

    #[test]
    fn emotion_categories_rewrite_matches_the_worked_example() {
        assert_eq!(
            run(ModelKind::EmotionCategories),
            "interesting grisham tale of a lawyer that takes millions of dollars from his \
firm after faking his own anger fear sadness grisham usually is able to joy his readers \
early and in this case doesn't play his hand to soon the usually trust frank mueller \
makes this story even an even joy bet on audiobook"
        );
    }

    #[test]
    fn sentiment_categories_rewrite() {
        assert_eq!(
            run(ModelKind::SentimentCategories),
            "positive grisham tale of a lawyer that takes millions of dollars from his \
firm after faking his own negative grisham usually is able to positive his readers early \
and in this case doesn't positive his hand to soon the usually positive frank mueller \
makes this story even an even positive bet on audiobook"
        );
    }

    #[test]
    fn generic_models_preserve_length_and_positions() {
        let doc = normalize(REVIEW);
        let lex = mini_lex();
        let m = transform(&doc, &lex, ModelKind::Words);
        for kind in [
            ModelKind::AffectGeneric,
            ModelKind::SentimentGeneric,
            ModelKind::EmotionGeneric,
        ] {
            let g = transform(&doc, &lex, kind);
            assert_eq!(g.len(), m.len());
            for (a, b) in g.iter().zip(m.iter()) {
                assert!(a == b || a == GENERIC_TOKEN, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn emotion_generic_blanks_sentiment_only_words() {
        let out = run(ModelKind::EmotionGeneric);
        let tokens: Vec<&str> = out.split(' ').collect();
        assert_eq!(tokens[0], GENERIC_TOKEN, "sentiment-only word is masked");
        assert_eq!(tokens[18], "death");
        assert!(tokens
            .iter()
            .filter(|t| **t != GENERIC_TOKEN)
            .eq(["death", "hook", "reliable", "better"].iter()));
    }

    #[test]
    fn category_expansion_follows_canonical_order() {
        let lex = mini_lex();
        let death = lex.categories("death");
        assert_eq!(
            expand_categories(death, CategoryFilter::All),
            ["anger", "fear", "sadness", "negative"]
        );
        let hook = lex.categories("hook");
        assert_eq!(
            expand_categories(hook, CategoryFilter::EmotionsOnly),
            ["joy"]
        );
        assert_eq!(
            expand_categories(CategorySet::EMPTY, CategoryFilter::All),
            Vec::<&str>::new()
        );
    }

    #[test]
    fn multi_category_word_expands_to_one_token_per_category() {
        let abandon = "abandon\tfear\t1\nabandon\tsadness\t1\nabandon\tnegative\t1\n";
        let lex = Lexicon::parse(abandon.as_bytes()).unwrap();
        let doc = TokenSeq::from_tokens(vec!["abandon".to_string(), "tale".to_string()]);
        let out = transform(&doc, &lex, ModelKind::AffectCategories);
        assert_eq!(out.tokens(), ["fear", "sadness", "negative", "tale"]);
    }

    #[test]
    fn empty_lexicon_degenerate_cases() {
        let doc = normalize("some plain words here");
        let lex = Lexicon::empty();
        for kind in [ModelKind::Affect, ModelKind::Sentiment, ModelKind::Emotion] {
            assert!(transform(&doc, &lex, kind).is_empty());
        }
        for kind in [
            ModelKind::AffectGeneric,
            ModelKind::SentimentGeneric,
            ModelKind::EmotionGeneric,
        ] {
            let out = transform(&doc, &lex, kind);
            assert_eq!(out.len(), doc.len());
            assert!(out.iter().all(|t| t == GENERIC_TOKEN));
        }
        for kind in [
            ModelKind::AffectCategories,
            ModelKind::SentimentCategories,
            ModelKind::EmotionCategories,
            ModelKind::WordsMinusAffect,
        ] {
            assert_eq!(transform(&doc, &lex, kind), doc);
        }
    }

    #[test]
    fn model_flags_round_trip() {
        for kind in ModelKind::ALL {
            assert_eq!(kind.flag().parse::<ModelKind>().unwrap(), kind);
        }
        assert!("xyz".parse::<ModelKind>().is_err());
    }
}

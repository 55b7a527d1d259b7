//! Sentiment scoring and stylometric writing features for message bodies.
//!
//! Sentiment is lexicon based with a negation flip; the six writing
//! features feed the authorship clustering stage.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TextError {
    #[error("lexicon error: {0}")]
    Lexicon(String),
    #[error("undefined input: {0}")]
    UndefinedInput(String),
}

const NEGATORS: [&str; 4] = ["not", "no", "never", "n't"];
const PUNCTUATION: &str = ".,;:!?'\"()-[]{}";

/// Token -> (polarity in [-1,1], subjectivity in [0,1]).
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: BTreeMap<String, (f64, f64)>,
}

impl Lexicon {
    /// Parses the TSV lexicon format: `token<TAB>polarity<TAB>subjectivity`,
    /// `#` comments. Rejects out-of-range scores.
    pub fn parse(text: &str) -> Result<Self, TextError> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split('\t');
            let (token, polarity, subjectivity) = match (parts.next(), parts.next(), parts.next())
            {
                (Some(t), Some(p), Some(s)) => (t.trim(), p.trim(), s.trim()),
                _ => {
                    return Err(TextError::Lexicon(format!(
                        "line {}: expected token<TAB>polarity<TAB>subjectivity",
                        lineno + 1
                    )))
                }
            };
            let polarity: f64 = polarity
                .parse()
                .map_err(|_| TextError::Lexicon(format!("line {}: bad polarity", lineno + 1)))?;
            let subjectivity: f64 = subjectivity.parse().map_err(|_| {
                TextError::Lexicon(format!("line {}: bad subjectivity", lineno + 1))
            })?;
            if token.is_empty() || !(-1.0..=1.0).contains(&polarity)
                || !(0.0..=1.0).contains(&subjectivity)
            {
                return Err(TextError::Lexicon(format!(
                    "line {}: token empty or score out of range",
                    lineno + 1
                )));
            }
            entries.insert(token.to_lowercase(), (polarity, subjectivity));
        }
        Ok(Lexicon { entries })
    }

    /// The small evaluative-word lexicon that ships with the tool.
    pub fn builtin() -> Self {
        Lexicon::parse(include_str!("../data/lexicon.tsv"))
            .expect("builtin lexicon must be well-formed")
    }

    pub fn from_entries<I: IntoIterator<Item = (String, f64, f64)>>(entries: I) -> Self {
        Lexicon {
            entries: entries
                .into_iter()
                .map(|(t, p, s)| (t.to_lowercase(), (p, s)))
                .collect(),
        }
    }

    pub fn lookup(&self, token: &str) -> Option<(f64, f64)> {
        self.entries.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Unicode-aware word tokenization: split on non-alphanumeric, lowercase.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

/// Mean lexicon polarity/subjectivity over matched tokens; a preceding
/// negator flips the polarity sign of the next matched token.
/// Zero matches yield (0, 0).
pub fn sentiment(text: &str, lexicon: &Lexicon) -> (f64, f64) {
    let tokens = tokenize(text);
    let mut polarity_sum = 0.0;
    let mut subjectivity_sum = 0.0;
    let mut matched = 0usize;
    let mut negate_next = false;
    for token in &tokens {
        if NEGATORS.contains(&token.as_str()) {
            negate_next = true;
            continue;
        }
        if let Some((polarity, subjectivity)) = lexicon.lookup(token) {
            polarity_sum += if negate_next { -polarity } else { polarity };
            subjectivity_sum += subjectivity;
            matched += 1;
        }
        negate_next = false;
    }
    if matched == 0 {
        (0.0, 0.0)
    } else {
        (polarity_sum / matched as f64, subjectivity_sum / matched as f64)
    }
}

fn count_sentences(text: &str) -> usize {
    let mut sentences = 0;
    let mut in_run = false;
    for c in text.chars() {
        if matches!(c, '.' | '?' | '!') {
            if !in_run {
                sentences += 1;
            }
            in_run = true;
        } else {
            in_run = false;
        }
    }
    sentences.max(1)
}

/// Vowel-group syllable heuristic: count runs of aeiouy, subtract one for a
/// trailing silent `e` when the count exceeds 1 (except consonant+`le`
/// endings like "table"), minimum 1 per word.
fn count_syllables(word: &str) -> usize {
    let mut groups = 0;
    let mut in_group = false;
    for c in word.chars() {
        let vowel = matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y');
        if vowel && !in_group {
            groups += 1;
        }
        in_group = vowel;
    }
    let consonant_le = word.len() >= 3
        && word.ends_with("le")
        && !matches!(
            word.as_bytes()[word.len() - 3] as char,
            'a' | 'e' | 'i' | 'o' | 'u' | 'y'
        );
    if groups > 1 && word.ends_with('e') && !consonant_le {
        groups -= 1;
    }
    groups.max(1)
}

/// Flesch reading ease: 206.835 - 1.015*(words/sentences) - 84.6*(syllables/words).
pub fn flesch_readability(text: &str) -> Result<f64, TextError> {
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return Err(TextError::UndefinedInput(
            "readability needs at least one word".into(),
        ));
    }
    let words = tokens.len() as f64;
    let sentences = count_sentences(text) as f64;
    let syllables: usize = tokens.iter().map(|t| count_syllables(t)).sum();
    Ok(206.835 - 1.015 * (words / sentences) - 84.6 * (syllables as f64 / words))
}

/// The six writing features clustered for authorship analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StyleFeatures {
    pub polarity: f64,
    pub subjectivity: f64,
    pub lexical_richness: f64,
    pub punctuation_frequency: f64,
    pub readability: f64,
    pub avg_sentence_length: f64,
    /// Set for empty text, where every feature is recorded as zero.
    pub degenerate: bool,
}

impl StyleFeatures {
    pub const DIMENSIONS: usize = 6;
    pub const FEATURE_NAMES: [&'static str; 6] = [
        "polarity",
        "subjectivity",
        "lexical_richness",
        "punctuation_frequency",
        "readability",
        "avg_sentence_length",
    ];

    pub fn as_vector(&self) -> [f64; 6] {
        [
            self.polarity,
            self.subjectivity,
            self.lexical_richness,
            self.punctuation_frequency,
            self.readability,
            self.avg_sentence_length,
        ]
    }
}

pub fn style_features(text: &str, lexicon: &Lexicon) -> StyleFeatures {
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return StyleFeatures {
            polarity: 0.0,
            subjectivity: 0.0,
            lexical_richness: 0.0,
            punctuation_frequency: 0.0,
            readability: 0.0,
            avg_sentence_length: 0.0,
            degenerate: true,
        };
    }
    let (polarity, subjectivity) = sentiment(text, lexicon);
    let distinct: std::collections::BTreeSet<&str> =
        tokens.iter().map(String::as_str).collect();
    let lexical_richness = distinct.len() as f64 / tokens.len() as f64;
    let punctuation = text.chars().filter(|c| PUNCTUATION.contains(*c)).count();
    let punctuation_frequency = punctuation as f64 / tokens.len().max(1) as f64;
    let readability = flesch_readability(text).unwrap_or(0.0);
    let avg_sentence_length = tokens.len() as f64 / count_sentences(text) as f64;
    StyleFeatures {
        polarity,
        subjectivity,
        lexical_richness,
        punctuation_frequency,
        readability,
        avg_sentence_length,
        degenerate: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_lexicon() -> Lexicon {
        Lexicon::from_entries([
            ("good".to_string(), 0.7, 0.6),
            ("terrible".to_string(), -0.8, 0.9),
        ])
    }

    #[test]
    fn empty_text_sentiment_is_zero() {
        assert_eq!(sentiment("", &tiny_lexicon()), (0.0, 0.0));
    }

    #[test]
    fn mean_over_matched_tokens() {
        let (p, s) = sentiment("good good terrible", &tiny_lexicon());
        assert!((p - 0.2).abs() < 1e-12);
        assert!((s - 0.7).abs() < 1e-12);
    }

    #[test]
    fn negator_flips_next_match() {
        let (p, s) = sentiment("not good", &tiny_lexicon());
        assert!((p + 0.7).abs() < 1e-12);
        assert!((s - 0.6).abs() < 1e-12);
    }

    #[test]
    fn flesch_single_word() {
        let score = flesch_readability("Go.").unwrap();
        assert!((score - 121.22).abs() < 0.01);
    }

    #[test]
    fn flesch_three_monosyllables() {
        let score = flesch_readability("The cat sat.").unwrap();
        assert!((score - 119.19).abs() < 0.01);
    }

    #[test]
    fn flesch_empty_is_undefined() {
        assert!(matches!(
            flesch_readability(""),
            Err(TextError::UndefinedInput(_))
        ));
    }

    #[test]
    fn type_token_ratio() {
        let f = style_features("aa aa aa", &tiny_lexicon());
        assert!((f.lexical_richness - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn sentence_length_and_punctuation() {
        let f = style_features("Hi! Hi! Hi!", &tiny_lexicon());
        assert!((f.avg_sentence_length - 1.0).abs() < 1e-12);
        assert!((f.punctuation_frequency - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_text_is_degenerate_zero_vector() {
        let f = style_features("", &tiny_lexicon());
        assert!(f.degenerate);
        assert_eq!(f.as_vector(), [0.0; 6]);
    }

    #[test]
    fn builtin_lexicon_is_valid_and_sized() {
        let lexicon = Lexicon::builtin();
        assert!(lexicon.len() >= 250, "got {}", lexicon.len());
        assert!(lexicon.lookup("excellent").unwrap().0 > 0.0);
        assert!(lexicon.lookup("broken").unwrap().0 < 0.0);
    }

    #[test]
    fn syllable_heuristic_cases() {
        assert_eq!(count_syllables("cat"), 1);
        assert_eq!(count_syllables("table"), 2); // consonant+le keeps its e
        assert_eq!(count_syllables("whale"), 1); // silent e subtracted
        assert_eq!(count_syllables("he"), 1);
        assert_eq!(count_syllables("readability"), 5);
    }

    proptest::proptest! {
        #[test]
        fn sentiment_stays_in_range(text in ".{0,200}") {
            let (p, s) = sentiment(&text, &Lexicon::builtin());
            proptest::prop_assert!((-1.0..=1.0).contains(&p));
            proptest::prop_assert!((0.0..=1.0).contains(&s));
        }

        #[test]
        fn richness_invariant_under_permutation(words in proptest::collection::vec("[a-z]{1,6}", 1..30)) {
            let text = words.join(" ");
            let mut reversed = words.clone();
            reversed.reverse();
            let text_rev = reversed.join(" ");
            let lex = Lexicon::builtin();
            let a = style_features(&text, &lex);
            let b = style_features(&text_rev, &lex);
            proptest::prop_assert!((a.lexical_richness - b.lexical_richness).abs() < 1e-12);
            proptest::prop_assert!((a.punctuation_frequency - b.punctuation_frequency).abs() < 1e-12);
        }

        #[test]
        fn duplicating_text_never_raises_richness(words in proptest::collection::vec("[a-z]{1,6}", 1..30)) {
            let text = words.join(" ");
            let doubled = format!("{text} {text}");
            let lex = Lexicon::builtin();
            let single = style_features(&text, &lex).lexical_richness;
            let double = style_features(&doubled, &lex).lexical_richness;
            proptest::prop_assert!(double <= single + 1e-12);
        }
    }
}

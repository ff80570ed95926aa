//! Deterministic text preprocessing shared by the sentence classifier, the
//! TF-IDF skill extractor and the transcript similarity feature.
//!
//! The pipeline is: split into sentences, lowercase, drop everything that is
//! not a letter, digit, `+`, `#` or an inner `.`, remove stop words, then
//! apply a small rule-based suffix stemmer. Every step is a pure function of
//! its input, so the same text yields the same tokens on every platform.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

/// Bumped whenever the tokenizer or stemmer rules change in a way that alters
/// output tokens. Persisted models record it.
pub const STEMMER_VERSION: u32 = 1;

/// Default maximum n-gram order.
pub const DEFAULT_MAX_N: usize = 3;

const SUFFIXES: [&str; 4] = ["ing", "ed", "es", "s"];
const MIN_STEM_CHARS: usize = 3;

static ENGLISH_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

/// A set of stop words, matched against lowercase tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopWords(HashSet<String>);

impl StopWords {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The bundled English list.
    pub fn english() -> Self {
        Self::parse(ENGLISH_STOPWORDS)
    }

    /// One word per line. Blank lines and lines starting with `//` are ignored.
    pub fn parse(text: &str) -> Self {
        Self(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with("//"))
                .map(str::to_lowercase)
                .collect(),
        )
    }

    pub fn load(path: impl AsRef<Path>) -> io::Result<Self> {
        Ok(Self::parse(&fs::read_to_string(path)?))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for StopWords {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self(iter.into_iter().map(|s| s.into().to_lowercase()).collect())
    }
}

/// One preprocessed sentence.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Sentence {
    pub source_id: String,
    pub section_label: String,
    pub raw: String,
    pub tokens: Vec<String>,
}

impl Sentence {
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Sentence {
            tokens: tokens.into_iter().map(Into::into).collect(),
            ..Default::default()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// A contiguous run of 1..=n tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NGram {
    pub terms: Vec<String>,
}

impl NGram {
    pub fn new<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        NGram {
            terms: terms.into_iter().map(Into::into).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.terms.len()
    }

    pub fn head(&self) -> &str {
        &self.terms[0]
    }

    /// Terms joined by single spaces.
    pub fn text(&self) -> String {
        self.terms.join(" ")
    }
}

impl fmt::Display for NGram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text())
    }
}

/// Splits `raw_text` into sentences and normalizes each one. Sentences that
/// end up with no tokens are dropped.
pub fn preprocess(raw_text: &str, stopwords: &StopWords) -> Vec<Sentence> {
    preprocess_section("", "", raw_text, stopwords)
}

/// Like [`preprocess`], tagging every sentence with its origin.
pub fn preprocess_section(
    source_id: &str,
    section_label: &str,
    raw_text: &str,
    stopwords: &StopWords,
) -> Vec<Sentence> {
    split_sentences(raw_text)
        .into_iter()
        .filter_map(|raw| {
            let tokens = normalize_tokens(raw, stopwords, true);
            (!tokens.is_empty()).then(|| Sentence {
                source_id: source_id.to_string(),
                section_label: section_label.to_string(),
                raw: raw.trim().to_string(),
                tokens,
            })
        })
        .collect()
}

/// Lowercased, stop-word-filtered surface words with no stemming, for lookups
/// in pre-trained word-vector vocabularies. Sentence boundaries are ignored.
pub fn word_tokens(raw_text: &str, stopwords: Option<&StopWords>) -> Vec<String> {
    let empty = StopWords::empty();
    let stopwords = stopwords.unwrap_or(&empty);
    split_sentences(raw_text)
        .into_iter()
        .flat_map(|s| normalize_tokens(s, stopwords, false))
        .collect()
}

/// Splits on `!`, `?`, `;`, line breaks and on `.` unless the period sits
/// directly before a letter or digit (`node.js`, `3.7`).
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        let boundary = match c {
            '!' | '?' | ';' | '\n' | '\r' => true,
            '.' => !matches!(chars.peek(), Some((_, next)) if next.is_alphanumeric()),
            _ => false,
        };
        if boundary {
            out.push(&text[start..i]);
            start = i + c.len_utf8();
        }
    }
    out.push(&text[start..]);
    out.retain(|s| !s.trim().is_empty());
    out
}

fn is_token_char(c: char) -> bool {
    c.is_alphanumeric() || c == '+' || c == '#' || c == '.'
}

fn normalize_tokens(sentence: &str, stopwords: &StopWords, stem_tokens: bool) -> Vec<String> {
    let lower = sentence.to_lowercase();
    lower
        .split(|c: char| !is_token_char(c))
        .map(|t| t.trim_matches('.'))
        .filter(|t| t.chars().any(char::is_alphanumeric))
        .filter(|t| !stopwords.contains(t))
        .map(|t| if stem_tokens { stem(t) } else { t.to_string() })
        .filter(|t| !stopwords.contains(t))
        .collect()
}

/// Rule-based suffix stripper: repeatedly removes one of `ing`, `ed`, `es`,
/// `s` (first match wins) while at least three characters remain. Words
/// ending in `ss` are left alone, as are stems that would end in punctuation
/// (`aa.s`). Iterating to a fixpoint makes the stemmer
/// idempotent.
pub fn stem(word: &str) -> String {
    let mut current = word;
    while let Some(next) = strip_suffix_once(current) {
        current = next;
    }
    current.to_string()
}

fn strip_suffix_once(word: &str) -> Option<&str> {
    if word.ends_with("ss") {
        return None;
    }
    let chars = word.chars().count();
    SUFFIXES.iter().find_map(|suffix| {
        let stem = word.strip_suffix(suffix)?;
        let ends_in_word_char = stem.chars().last().is_some_and(char::is_alphanumeric);
        (chars - suffix.len() >= MIN_STEM_CHARS && ends_in_word_char).then_some(stem)
    })
}

/// All contiguous n-grams of order 1..=`max_n`, grouped by order and
/// left-to-right within an order.
pub fn ngrams(sentence: &Sentence, max_n: usize) -> Vec<NGram> {
    ngrams_of(&sentence.tokens, max_n)
}

pub fn ngrams_of(tokens: &[String], max_n: usize) -> Vec<NGram> {
    (1..=max_n)
        .flat_map(|n| tokens.windows(n).map(|w| NGram { terms: w.to_vec() }))
        .collect()
}

//! Per-comment measures: sentiment, readability, entropy and length.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::resources::{SentimentLexicon, WordSet};
use crate::textprep::CleanComment;

/// Seconds of reading time charged per character of normalised text.
pub const SECONDS_PER_CHAR: f64 = 0.01469;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommentFeatures {
    pub comment_id: String,
    pub photo_id: String,
    pub polarity: f64,
    pub subjectivity: f64,
    pub difficult_words: u32,
    pub reading_time_s: f64,
    pub entropy_bits: f64,
    pub length_chars: u32,
}

/// Mean polarity and subjectivity of the tokens found in the lexicon, or
/// `(0, 0)` when none are.
pub fn sentiment(tokens: &[String], lex: &SentimentLexicon) -> (f64, f64) {
    let mut hits = 0usize;
    let (mut pol, mut subj) = (0.0, 0.0);
    for (p, s) in tokens.iter().filter_map(|t| lex.get(t)) {
        hits += 1;
        pol += p;
        subj += s;
    }
    if hits == 0 {
        (0.0, 0.0)
    } else {
        (pol / hits as f64, subj / hits as f64)
    }
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Syllable estimate: maximal runs of `aeiouy`, less one for a silent
/// trailing `e` after a consonant, never below one.
pub fn syllables(word: &str) -> u32 {
    let chars: Vec<char> = word.chars().collect();
    let mut groups = 0u32;
    let mut in_group = false;
    for &c in &chars {
        let v = is_vowel(c);
        if v && !in_group {
            groups += 1;
        }
        in_group = v;
    }
    if let [.., before, 'e'] = chars[..] {
        if !is_vowel(before) && groups > 1 {
            groups -= 1;
        }
    }
    groups.max(1)
}

/// Distinct tokens with three or more syllables that are not easy words.
pub fn difficult_words(tokens: &[String], easy: &WordSet) -> u32 {
    tokens
        .iter()
        .map(String::as_str)
        .collect::<BTreeSet<&str>>()
        .into_iter()
        .filter(|t| syllables(t) >= 3 && !easy.contains(t))
        .count() as u32
}

pub fn reading_time(char_text: &str, seconds_per_char: f64) -> f64 {
    char_text.chars().count() as f64 * seconds_per_char
}

/// Shannon entropy (bits per character) of the character distribution.
pub fn entropy(text: &str) -> Result<f64> {
    let mut counts: HashMap<char, u64> = HashMap::new();
    let mut n = 0u64;
    for c in text.chars() {
        *counts.entry(c).or_default() += 1;
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyInput("entropy of empty text"));
    }
    // H = log2 n - (1/n) * sum c log2 c; exact for power-of-two counts.
    let mut weighted: Vec<f64> = counts.values().map(|&c| c as f64 * (c as f64).log2()).collect();
    weighted.sort_by(f64::total_cmp);
    let sum: f64 = weighted.iter().sum();
    Ok(((n as f64).log2() - sum / n as f64).max(0.0))
}

/// Code points in the raw (pre-normalisation) text.
pub fn comment_length(raw_text: &str) -> u32 {
    raw_text.chars().count() as u32
}

#[derive(Debug, Clone)]
pub struct TextFeaturizer {
    pub lexicon: SentimentLexicon,
    pub easy_words: WordSet,
    pub seconds_per_char: f64,
}

impl Default for TextFeaturizer {
    fn default() -> Self {
        TextFeaturizer {
            lexicon: SentimentLexicon::bundled(),
            easy_words: WordSet::bundled_easy_words(),
            seconds_per_char: SECONDS_PER_CHAR,
        }
    }
}

impl TextFeaturizer {
    pub fn features(&self, c: &CleanComment) -> Result<CommentFeatures> {
        let (polarity, subjectivity) = sentiment(&c.tokens, &self.lexicon);
        Ok(CommentFeatures {
            comment_id: c.comment_id.clone(),
            photo_id: c.photo_id.clone(),
            polarity,
            subjectivity,
            difficult_words: difficult_words(&c.tokens, &self.easy_words),
            reading_time_s: reading_time(&c.char_text, self.seconds_per_char),
            entropy_bits: entropy(&c.char_text)?,
            length_chars: c.original_length as u32,
        })
    }

    pub fn features_all(&self, comments: &[CleanComment]) -> Result<Vec<CommentFeatures>> {
        par::map_slice(comments, |c| self.features(c)).into_iter().collect()
    }
}

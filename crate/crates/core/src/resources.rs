//! Bundled word lists and lookup tables, with loaders for user overrides.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use crate::error::{Error, Result};

pub const STOPWORDS: &str = include_str!("../data/stopwords.txt");
pub const EMOJI_NAMES: &str = include_str!("../data/emoji_names.tsv");
pub const SENTIMENT_LEXICON: &str = include_str!("../data/sentiment_lexicon.tsv");
pub const EASY_WORDS: &str = include_str!("../data/easy_words.txt");

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn format_error(origin: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        path: origin.into(),
        message: format!("line {line}: {}", message.into()),
    }
}

/// A set of lowercase words, one per line. Blank lines and `#` comments are
/// ignored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WordSet(HashSet<String>);

impl WordSet {
    pub fn parse(text: &str) -> Self {
        WordSet(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_lowercase)
                .collect(),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(Self::parse(&read(path)?))
    }

    pub fn bundled_stopwords() -> Self {
        Self::parse(STOPWORDS)
    }

    pub fn bundled_easy_words() -> Self {
        Self::parse(EASY_WORDS)
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

impl<S: Into<String>> FromIterator<S> for WordSet {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        WordSet(iter.into_iter().map(|s| s.into().to_lowercase()).collect())
    }
}

/// Emoji sequences mapped to their lowercase short names.
///
/// File format: space-separated hexadecimal code points, a tab, the name.
#[derive(Debug, Clone, Default)]
pub struct EmojiTable {
    names: HashMap<String, String>,
    starts: HashSet<char>,
    max_chars: usize,
}

impl EmojiTable {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut table = EmojiTable::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (codes, name) = line
                .split_once('\t')
                .ok_or_else(|| format_error(origin, i + 1, "expected `codepoints<TAB>name`"))?;
            let seq = codes
                .split_whitespace()
                .map(|h| {
                    u32::from_str_radix(h, 16)
                        .ok()
                        .and_then(char::from_u32)
                        .ok_or_else(|| format_error(origin, i + 1, format!("bad code point `{h}`")))
                })
                .collect::<Result<String>>()?;
            table.insert(seq, name.trim().to_lowercase());
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read(path)?, &path.display().to_string())
    }

    pub fn bundled() -> Self {
        Self::parse(EMOJI_NAMES, "emoji_names.tsv").expect("bundled emoji table is well formed")
    }

    pub fn insert(&mut self, sequence: String, name: String) {
        let Some(first) = sequence.chars().next() else {
            return;
        };
        self.starts.insert(first);
        self.max_chars = self.max_chars.max(sequence.chars().count());
        self.names.insert(sequence, name);
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Replaces every emoji sequence (longest match first) with its name
    /// surrounded by spaces.
    pub fn replace(&self, text: &str) -> String {
        if !text.chars().any(|c| self.starts.contains(&c)) {
            return text.to_string();
        }
        let bounds: Vec<usize> = text
            .char_indices()
            .map(|(i, _)| i)
            .chain(std::iter::once(text.len()))
            .collect();
        let n_chars = bounds.len() - 1;
        let mut out = String::with_capacity(text.len() + 16);
        let mut i = 0;
        while i < n_chars {
            let start = bounds[i];
            let first = text[start..].chars().next().expect("in bounds");
            let mut matched = None;
            if self.starts.contains(&first) {
                let longest = self.max_chars.min(n_chars - i);
                for len in (1..=longest).rev() {
                    if let Some(name) = self.names.get(&text[start..bounds[i + len]]) {
                        matched = Some((len, name));
                        break;
                    }
                }
            }
            match matched {
                Some((len, name)) => {
                    out.push(' ');
                    out.push_str(name);
                    out.push(' ');
                    i += len;
                }
                None => {
                    out.push(first);
                    i += 1;
                }
            }
        }
        out
    }
}

/// Word-level polarity and subjectivity scores.
#[derive(Debug, Clone, Default)]
pub struct SentimentLexicon {
    entries: HashMap<String, (f64, f64)>,
}

impl SentimentLexicon {
    /// Parses `word<TAB>polarity<TAB>subjectivity` lines.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut lex = SentimentLexicon::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [word, pol, subj] = fields[..] else {
                return Err(format_error(origin, i + 1, "expected three tab-separated fields"));
            };
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| format_error(origin, i + 1, format!("bad number `{s}`")))
            };
            lex.insert(word, num(pol)?, num(subj)?)
                .map_err(|m| format_error(origin, i + 1, m))?;
        }
        Ok(lex)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read(path)?, &path.display().to_string())
    }

    pub fn bundled() -> Self {
        Self::parse(SENTIMENT_LEXICON, "sentiment_lexicon.tsv").expect("bundled lexicon is well formed")
    }

    pub fn insert(&mut self, word: &str, polarity: f64, subjectivity: f64) -> std::result::Result<(), String> {
        if !(-1.0..=1.0).contains(&polarity) {
            return Err(format!("polarity {polarity} outside [-1, 1]"));
        }
        if !(0.0..=1.0).contains(&subjectivity) {
            return Err(format!("subjectivity {subjectivity} outside [0, 1]"));
        }
        self.entries
            .insert(word.trim().to_lowercase(), (polarity, subjectivity));
        Ok(())
    }

    /// Case-insensitive lookup.
    pub fn get(&self, word: &str) -> Option<(f64, f64)> {
        match self.entries.get(word) {
            Some(v) => Some(*v),
            None => self.entries.get(&word.to_lowercase()).copied(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_tables_load() {
        assert!(WordSet::bundled_stopwords().contains("the"));
        assert!(WordSet::bundled_stopwords().len() > 120);
        assert!(WordSet::bundled_easy_words().contains("cat"));
        assert!(EmojiTable::bundled().len() > 3000);
        let lex = SentimentLexicon::bundled();
        assert_eq!(lex.get("great"), Some((0.8, 0.75)));
        assert_eq!(lex.get("GREAT"), Some((0.8, 0.75)));
    }

    #[test]
    fn emoji_longest_match() {
        let table = EmojiTable::bundled();
        assert_eq!(
            table.replace("❤️").split_whitespace().collect::<Vec<_>>(),
            ["red", "heart"]
        );
        // Bare heart without the variation selector also resolves.
        assert_eq!(table.replace("a❤b"), "a red heart b");
        assert_eq!(table.replace("plain"), "plain");
    }

    #[test]
    fn lexicon_rejects_out_of_range() {
        assert!(SentimentLexicon::parse("x\t1.5\t0.1\n", "t").is_err());
        assert!(SentimentLexicon::parse("x\t0.5\n", "t").is_err());
    }
}

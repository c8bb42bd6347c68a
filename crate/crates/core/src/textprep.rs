//! Comment text normalisation.
//!
//! The steps run in a fixed order: lowercase, emoji to short name, hyperlink
//! removal, non-alphanumeric characters to spaces, whitespace collapse, and
//! finally dropping comments that are empty or made only of stopwords.
//! "Alphanumeric" follows Unicode, so accented letters survive.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::dataset::CommentRecord;
use crate::par;
use crate::resources::{EmojiTable, WordSet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanComment {
    pub comment_id: String,
    pub photo_id: String,
    pub tokens: Vec<String>,
    /// Normalised text: tokens joined by single spaces.
    pub char_text: String,
    /// Code points in the raw text.
    pub original_length: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DropReason {
    Empty,
    StopwordsOnly,
}

impl DropReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::Empty => "empty",
            DropReason::StopwordsOnly => "stopwords-only",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Normalized {
    Clean(CleanComment),
    Dropped(DropReason),
}

fn link_pattern() -> &'static Regex {
    static LINK: OnceLock<Regex> = OnceLock::new();
    LINK.get_or_init(|| Regex::new(r"(?:[a-z][a-z0-9+.\-]*://|www\.)\S*").expect("valid hyperlink pattern"))
}

#[derive(Debug, Clone)]
pub struct Normalizer {
    stopwords: WordSet,
    emoji: EmojiTable,
}

impl Default for Normalizer {
    fn default() -> Self {
        Normalizer::new(WordSet::bundled_stopwords(), EmojiTable::bundled())
    }
}

impl Normalizer {
    pub fn new(stopwords: WordSet, emoji: EmojiTable) -> Self {
        Normalizer { stopwords, emoji }
    }

    /// Runs the normalisation steps on a bare string and returns the
    /// normalised text and its tokens.
    pub fn normalize_text(&self, raw: &str) -> Result<(String, Vec<String>), DropReason> {
        let lowered = raw.to_lowercase();
        let named = self.emoji.replace(&lowered);
        let unlinked = link_pattern().replace_all(&named, " ");
        let spaced: String = unlinked
            .chars()
            .map(|c| if c.is_alphanumeric() { c } else { ' ' })
            .collect();
        let tokens: Vec<String> = spaced.split_whitespace().map(str::to_string).collect();
        if tokens.is_empty() {
            return Err(DropReason::Empty);
        }
        if tokens.iter().all(|t| self.stopwords.contains(t)) {
            return Err(DropReason::StopwordsOnly);
        }
        Ok((tokens.join(" "), tokens))
    }

    pub fn normalize_comment(&self, raw: &CommentRecord) -> Normalized {
        match self.normalize_text(&raw.raw_text) {
            Ok((char_text, tokens)) => Normalized::Clean(CleanComment {
                comment_id: raw.comment_id.clone(),
                photo_id: raw.photo_id.clone(),
                tokens,
                char_text,
                original_length: raw.raw_text.chars().count(),
            }),
            Err(reason) => Normalized::Dropped(reason),
        }
    }

    /// Normalises a batch of comments, preserving input order.
    pub fn normalize_all(&self, comments: &[CommentRecord]) -> NormalizedBatch {
        let results = par::map_slice(comments, |c| self.normalize_comment(c));
        let mut batch = NormalizedBatch::default();
        for (raw, result) in comments.iter().zip(results) {
            match result {
                Normalized::Clean(c) => batch.clean.push(c),
                Normalized::Dropped(reason) => batch.dropped.push(DroppedComment {
                    comment_id: raw.comment_id.clone(),
                    reason,
                }),
            }
        }
        batch
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedComment {
    pub comment_id: String,
    pub reason: DropReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NormalizedBatch {
    pub clean: Vec<CleanComment>,
    pub dropped: Vec<DroppedComment>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tokens(n: &Normalizer, s: &str) -> Vec<String> {
        n.normalize_text(s).map(|(_, t)| t).unwrap_or_default()
    }

    #[test]
    fn strips_links_and_punctuation() {
        let n = Normalizer::default();
        assert_eq!(tokens(&n, "Great shot! https://t.co/x"), ["great", "shot"]);
        assert_eq!(tokens(&n, "see www.flickr.com/p/1 now"), ["see", "now"]);
        assert_eq!(tokens(&n, "WOW!!!   so...cool"), ["wow", "so", "cool"]);
    }

    #[test]
    fn emoji_become_names() {
        let n = Normalizer::default();
        assert_eq!(tokens(&n, "❤️"), ["red", "heart"]);
        assert_eq!(
            tokens(&n, "love it😍"),
            ["love", "it", "smiling", "face", "with", "heart", "eyes"]
        );
    }

    #[test]
    fn accents_are_kept() {
        let n = Normalizer::default();
        assert_eq!(tokens(&n, "Fotógrafo, ¡Qué BONITA!"), ["fotógrafo", "qué", "bonita"]);
    }

    #[test]
    fn drops_empty_and_stopword_only() {
        let n = Normalizer::default();
        assert_eq!(n.normalize_text("the a of"), Err(DropReason::StopwordsOnly));
        assert_eq!(n.normalize_text("  !!! "), Err(DropReason::Empty));
        assert_eq!(n.normalize_text("http://only.link"), Err(DropReason::Empty));
    }

    #[test]
    fn batch_keeps_order_and_lengths() {
        let n = Normalizer::default();
        let raw = |id: &str, t: &str| CommentRecord {
            comment_id: id.into(),
            photo_id: "p".into(),
            raw_text: t.into(),
        };
        let batch = n.normalize_all(&[raw("c1", "Nice ❤️"), raw("c2", "the"), raw("c3", "ok")]);
        assert_eq!(batch.clean.len(), 2);
        assert_eq!(batch.clean[0].original_length, 7);
        assert_eq!(batch.clean[0].char_text, "nice red heart");
        assert_eq!(batch.dropped[0].comment_id, "c2");
        assert_eq!(batch.dropped[0].reason.as_str(), "stopwords-only");
    }

    proptest! {
        #[test]
        fn idempotent_and_clean_alphabet(s in "\\PC{0,40}") {
            let n = Normalizer::default();
            if let Ok((text, toks)) = n.normalize_text(&s) {
                prop_assert!(text.chars().all(|c| c == ' ' || (c.is_alphanumeric() && c.to_lowercase().eq([c]))));
                prop_assert!(!text.contains("  ") && !text.starts_with(' ') && !text.ends_with(' '));
                prop_assert_eq!(toks.join(" "), text.clone());
                let (again, _) = n.normalize_text(&text).expect("retained text stays retained");
                prop_assert_eq!(again, text);
            }
        }

        #[test]
        fn stopword_subsets_always_dropped(idx in proptest::collection::vec(0usize..1000, 1..8), sep in "[ .,!?]{1,3}") {
            let n = Normalizer::default();
            let words: Vec<&str> = crate::resources::STOPWORDS.lines().filter(|l| !l.is_empty()).collect();
            let text = idx.iter().map(|i| words[i % words.len()]).collect::<Vec<_>>().join(&sep);
            prop_assert_eq!(n.normalize_text(&text), Err(DropReason::StopwordsOnly));
        }
    }
}

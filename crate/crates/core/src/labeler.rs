//! Ground-truth labels from self-reported occupations.
//!
//! A user counts as a professional photographer when the lowercased
//! occupation contains any of a fixed set of multilingual substrings.
//! Matching is plain substring search with accents preserved, so some false
//! positives (e.g. "bildhauer") are expected; the matched term is kept for
//! auditing.

use serde::{Deserialize, Serialize};

use crate::dataset::UserRecord;
use crate::error::{Error, Result};

pub const PHOTOGRAPHY_TERMS: [&str; 13] = [
    "fot",
    "phot",
    "valokuv",
    "zdjęcie",
    "dealbh",
    "bild",
    "grianghraf",
    "nuotrauk",
    "pictur",
    "myndin",
    "billed",
    "ljósmyndari",
    "ritratt",
];

/// First term (in list order) contained in the lowercased occupation.
pub fn matched_term(occupation: &str) -> Option<&'static str> {
    if occupation.is_empty() {
        return None;
    }
    let lowered = occupation.to_lowercase();
    PHOTOGRAPHY_TERMS.iter().copied().find(|term| lowered.contains(term))
}

pub fn is_photography_occupation(occupation: &str) -> bool {
    matched_term(occupation).is_some()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserLabel {
    pub user_id: String,
    pub is_professional: bool,
    pub matched_term: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelVector {
    /// Sorted by `user_id`.
    pub labels: Vec<UserLabel>,
    pub positive_count: usize,
    pub prevalence: f64,
}

impl LabelVector {
    pub fn from_labels(mut labels: Vec<UserLabel>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyInput("label set"));
        }
        labels.sort_by(|a, b| a.user_id.cmp(&b.user_id));
        let positive_count = labels.iter().filter(|l| l.is_professional).count();
        let prevalence = positive_count as f64 / labels.len() as f64;
        Ok(LabelVector {
            labels,
            positive_count,
            prevalence,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, user_id: &str) -> Option<bool> {
        self.labels
            .binary_search_by(|l| l.user_id.as_str().cmp(user_id))
            .ok()
            .map(|i| self.labels[i].is_professional)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSummary {
    pub total: usize,
    pub positive_count: usize,
    pub prevalence: f64,
}

impl From<&LabelVector> for LabelSummary {
    fn from(v: &LabelVector) -> Self {
        LabelSummary {
            total: v.len(),
            positive_count: v.positive_count,
            prevalence: v.prevalence,
        }
    }
}

pub fn label_users(users: &[UserRecord]) -> Result<LabelVector> {
    let labels = users
        .iter()
        .map(|u| {
            let term = matched_term(&u.occupation);
            UserLabel {
                user_id: u.user_id.clone(),
                is_professional: term.is_some(),
                matched_term: term.map(str::to_string),
            }
        })
        .collect();
    LabelVector::from_labels(labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    fn user(id: &str, occupation: &str) -> UserRecord {
        UserRecord {
            user_id: id.into(),
            occupation: occupation.into(),
            total_photos: 1,
            join_date: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
            following_count: 0,
            groups_count: 0,
            is_pro: false,
            photos_in_window: 0,
        }
    }

    #[test]
    fn occupation_examples() {
        assert!(is_photography_occupation("Photographer"));
        assert!(is_photography_occupation("fotógrafo profesional"));
        assert!(!is_photography_occupation("software engineer"));
        assert!(!is_photography_occupation(""));
        assert_eq!(matched_term("Bildhauer"), Some("bild"));
        assert_eq!(matched_term("ZDJĘCIE ślubne"), Some("zdjęcie"));
        assert_eq!(matched_term("Ljósmyndari"), Some("ljósmyndari"));
        // No accent folding.
        assert!(!is_photography_occupation("zdjecie"));
    }

    #[test]
    fn prevalence_counts() {
        let users = [
            user("d", "teacher"),
            user("a", "Photographer"),
            user("c", ""),
            user("b", "nurse"),
        ];
        let v = label_users(&users).unwrap();
        assert_eq!(v.positive_count, 1);
        assert_eq!(v.prevalence, 0.25);
        assert_eq!(v.labels[0].user_id, "a");
        assert_eq!(v.labels[0].matched_term.as_deref(), Some("phot"));
        assert_eq!(v.get("a"), Some(true));
        assert_eq!(v.get("zz"), None);

        let none = label_users(&[user("x", "chef")]).unwrap();
        assert_eq!(none.prevalence, 0.0);
        assert!(label_users(&[]).is_err());
    }

    proptest! {
        #[test]
        fn case_invariant(s in "[a-zA-Z ęóńł]{0,20}") {
            prop_assert_eq!(is_photography_occupation(&s.to_uppercase()), is_photography_occupation(&s.to_lowercase()));
        }

        #[test]
        fn appending_never_unmatches(prefix in "\\PC{0,10}", term in 0usize..13, suffix in "\\PC{0,10}") {
            let s = format!("{prefix}{}{suffix}", PHOTOGRAPHY_TERMS[term]);
            prop_assert!(is_photography_occupation(&s));
        }

        #[test]
        fn order_independent(occs in proptest::collection::vec("[a-z ]{0,12}|photo[a-z]{0,4}", 1..20)) {
            let users: Vec<_> = occs.iter().enumerate().map(|(i, o)| user(&format!("u{i:02}"), o)).collect();
            let mut rev = users.clone();
            rev.reverse();
            prop_assert_eq!(label_users(&users).unwrap(), label_users(&rev).unwrap());
        }
    }
}

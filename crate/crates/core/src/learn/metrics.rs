//! Accuracy, F1 and ROC AUC.
//!
//! A sample is predicted positive when its probability is strictly greater
//! than 0.5.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn from_predictions(y: &[bool], predicted: &[bool]) -> Confusion {
        let mut c = Confusion::default();
        for (&t, &p) in y.iter().zip(predicted) {
            match (t, p) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn from_scores(y: &[bool], scores: &[f64]) -> Confusion {
        let predicted: Vec<bool> = scores.iter().map(|&s| s > THRESHOLD).collect();
        Confusion::from_predictions(y, &predicted)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        let n = self.total();
        if n == 0 {
            return 0.0;
        }
        (self.tp + self.tn) as f64 / n as f64
    }

    /// F1 of the positive class; 0 when there are no positives predicted or
    /// present.
    pub fn f1_positive(&self) -> f64 {
        f1_from(self.tp, self.fp, self.fn_)
    }

    pub fn f1_negative(&self) -> f64 {
        f1_from(self.tn, self.fn_, self.fp)
    }

    /// Per-class F1 averaged with class-support weights.
    pub fn f1_weighted(&self) -> f64 {
        let n = self.total();
        if n == 0 {
            return 0.0;
        }
        let pos = (self.tp + self.fn_) as f64;
        let neg = (self.tn + self.fp) as f64;
        (pos * self.f1_positive() + neg * self.f1_negative()) / n as f64
    }
}

fn f1_from(tp: usize, fp: usize, fn_: usize) -> f64 {
    let den = 2 * tp + fp + fn_;
    if den == 0 {
        0.0
    } else {
        (2 * tp) as f64 / den as f64
    }
}

pub fn accuracy(y: &[bool], scores: &[f64]) -> f64 {
    Confusion::from_scores(y, scores).accuracy()
}

pub fn f1(y: &[bool], scores: &[f64]) -> f64 {
    Confusion::from_scores(y, scores).f1_positive()
}

pub fn f1_weighted(y: &[bool], scores: &[f64]) -> f64 {
    Confusion::from_scores(y, scores).f1_weighted()
}

/// Mann-Whitney AUC from mid-ranks. Ranks are kept doubled so every
/// intermediate quantity is an integer and the result equals exhaustive pair
/// counting exactly.
pub fn auc(y: &[bool], scores: &[f64]) -> Result<f64> {
    if y.len() != scores.len() {
        return Err(Error::InvalidArgument(format!(
            "{} labels but {} scores",
            y.len(),
            scores.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("scores"));
    }
    let n_pos = y.iter().filter(|&&b| b).count() as u128;
    let n_neg = y.len() as u128 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Sum over positives of 2 * mid-rank (1-based).
    let mut doubled_rank_sum: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // Ranks i+1..=j share the mid-rank (i+1+j)/2.
        let doubled = (i + 1 + j) as u128;
        let pos_in_group = order[i..j].iter().filter(|&&k| y[k]).count() as u128;
        doubled_rank_sum += doubled * pos_in_group;
        i = j;
    }
    let doubled_u = doubled_rank_sum - n_pos * (n_pos + 1);
    Ok(doubled_u as f64 / (2 * n_pos * n_neg) as f64)
}

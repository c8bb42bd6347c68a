//! Stratified k-fold cross-validation.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FeatureSet};
use crate::labeler::LabelVector;
use crate::learn::metrics::{self, Confusion};
use crate::learn::{derive_seed, stream_rng, Classifier, ModelKind, ModelSpec};
use crate::matrix::Matrix;
use crate::par;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    /// Fold index of each row.
    pub assignments: Vec<usize>,
    pub positives: Vec<usize>,
    pub negatives: Vec<usize>,
}

impl FoldPlan {
    pub fn test_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }

    pub fn fold_size(&self, fold: usize) -> usize {
        self.positives[fold] + self.negatives[fold]
    }
}

/// Shuffles each class with `seed`, then deals positives round-robin over the
/// folds and continues dealing negatives from where the positives stopped,
/// which keeps both per-class counts and fold sizes within one of each other.
pub fn stratified_kfold(y: &[bool], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k must be at least 2, got {k}")));
    }
    let mut pos: Vec<usize> = (0..y.len()).filter(|&i| y[i]).collect();
    let mut neg: Vec<usize> = (0..y.len()).filter(|&i| !y[i]).collect();
    for (class, members) in [(true, &pos), (false, &neg)] {
        if members.len() < k {
            return Err(Error::TooFewClassMembers {
                class,
                count: members.len(),
                k,
            });
        }
    }
    pos.shuffle(&mut stream_rng(seed, 0));
    neg.shuffle(&mut stream_rng(seed, 1));

    let mut assignments = vec![0; y.len()];
    let mut positives = vec![0; k];
    let mut negatives = vec![0; k];
    for (j, &i) in pos.iter().enumerate() {
        assignments[i] = j % k;
        positives[j % k] += 1;
    }
    let offset = pos.len();
    for (j, &i) in neg.iter().enumerate() {
        let f = (offset + j) % k;
        assignments[i] = f;
        negatives[f] += 1;
    }
    Ok(FoldPlan {
        k,
        assignments,
        positives,
        negatives,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub n_test: usize,
    pub accuracy: f64,
    pub auc: f64,
    pub f1: f64,
    pub f1_weighted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: ModelKind,
    pub feature_set: Option<FeatureSet>,
    pub k: usize,
    pub seed: u64,
    /// Unweighted means over folds.
    pub accuracy: f64,
    pub auc: f64,
    /// Positive-class F1.
    pub f1: f64,
    /// Support-weighted F1 over both classes.
    pub f1_weighted: f64,
    pub folds: Vec<FoldMetrics>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub report: EvalReport,
    pub plan: FoldPlan,
    /// Held-out probability for every row.
    pub oof_scores: Vec<f64>,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

/// Fits on k-1 folds and scores the held-out fold, for every fold. Fold `f`
/// trains with seed `derive_seed(spec.seed, f)`.
pub fn cross_validate(spec: &ModelSpec, x: &Matrix, y: &[bool], k: usize) -> Result<CvOutcome> {
    if x.n_rows() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "{} rows but {} labels",
            x.n_rows(),
            y.len()
        )));
    }
    let plan = stratified_kfold(y, k, spec.seed)?;
    let per_fold = par::try_map_range(k, |fold| -> Result<(Vec<usize>, Vec<f64>, FoldMetrics)> {
        let train = plan.train_rows(fold);
        let test = plan.test_rows(fold);
        let y_train: Vec<bool> = train.iter().map(|&i| y[i]).collect();
        let y_test: Vec<bool> = test.iter().map(|&i| y[i]).collect();
        let fold_spec = ModelSpec {
            seed: derive_seed(spec.seed, fold as u64),
            ..spec.clone()
        };
        let model = fold_spec.fit(&x.select_rows(&train), &y_train)?;
        let scores = model.predict_proba_all(&x.select_rows(&test));
        let confusion = Confusion::from_scores(&y_test, &scores);
        let m = FoldMetrics {
            fold,
            n_test: test.len(),
            accuracy: confusion.accuracy(),
            auc: metrics::auc(&y_test, &scores)?,
            f1: confusion.f1_positive(),
            f1_weighted: confusion.f1_weighted(),
        };
        Ok((test, scores, m))
    })?;

    let mut oof_scores = vec![0.0; y.len()];
    let mut folds = Vec::with_capacity(k);
    for (test, scores, m) in per_fold {
        for (i, s) in test.into_iter().zip(scores) {
            oof_scores[i] = s;
        }
        folds.push(m);
    }
    let report = EvalReport {
        model: spec.kind,
        feature_set: None,
        k,
        seed: spec.seed,
        accuracy: mean(folds.iter().map(|f| f.accuracy)),
        auc: mean(folds.iter().map(|f| f.auc)),
        f1: mean(folds.iter().map(|f| f.f1)),
        f1_weighted: mean(folds.iter().map(|f| f.f1_weighted)),
        folds,
    };
    Ok(CvOutcome {
        report,
        plan,
        oof_scores,
    })
}

/// Labels for the matrix rows, matched by user id.
pub fn aligned_labels(matrix: &FeatureMatrix, labels: &LabelVector) -> Result<Vec<bool>> {
    matrix
        .user_ids
        .iter()
        .map(|u| {
            labels
                .get(u)
                .ok_or_else(|| Error::InvalidArgument(format!("no label for user {u}")))
        })
        .collect()
}

/// Cross-validates `spec` on a feature matrix, aligning labels by user id.
pub fn evaluate(spec: &ModelSpec, matrix: &FeatureMatrix, labels: &LabelVector, k: usize) -> Result<CvOutcome> {
    let y = aligned_labels(matrix, labels)?;
    let mut out = cross_validate(spec, &matrix.values, &y, k)?;
    out.report.feature_set = Some(matrix.feature_set);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hundred_rows_fifteen_positive() {
        let y: Vec<bool> = (0..100).map(|i| i < 15).collect();
        let plan = stratified_kfold(&y, 10, 3).unwrap();
        for f in 0..10 {
            assert_eq!(plan.fold_size(f), 10);
            assert!((1..=2).contains(&plan.positives[f]));
        }
        assert_eq!(plan, stratified_kfold(&y, 10, 3).unwrap());
    }

    #[test]
    fn rejects_bad_k() {
        let y = [true, false, true, false];
        assert!(stratified_kfold(&y, 1, 0).is_err());
        assert!(matches!(
            stratified_kfold(&y, 3, 0),
            Err(Error::TooFewClassMembers { .. })
        ));
    }

    #[test]
    fn separable_data_gives_perfect_auc() {
        let n = 60;
        let y: Vec<bool> = (0..n).map(|i| i % 3 == 0).collect();
        let rows: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                let shift = if y[i] { 100.0 } else { 0.0 };
                [shift + (i % 7) as f64, (i % 5) as f64]
            })
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        for kind in ModelKind::ALL {
            let out = cross_validate(&ModelSpec::new(kind, 1), &x, &y, 5).unwrap();
            assert_eq!(out.report.auc, 1.0, "{kind}");
            assert_eq!(out.report.folds.len(), 5);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn folds_partition_and_stratify(n_pos in 10usize..80, n_neg in 10usize..200, k in 2usize..11, seed in any::<u64>()) {
            let y: Vec<bool> = (0..n_pos + n_neg).map(|i| i < n_pos).collect();
            let plan = stratified_kfold(&y, k, seed).unwrap();
            prop_assert_eq!(plan.assignments.len(), y.len());
            prop_assert!(plan.assignments.iter().all(|&f| f < k));
            let max = plan.positives.iter().max().unwrap();
            let min = plan.positives.iter().min().unwrap();
            prop_assert!(max - min <= 1);
            let global = n_pos as f64 / y.len() as f64;
            for f in 0..k {
                let size = plan.fold_size(f) as f64;
                let rate = plan.positives[f] as f64 / size;
                prop_assert!((rate - global).abs() <= 1.0 / size + 1e-12);
                prop_assert_eq!(plan.test_rows(f).len() + plan.train_rows(f).len(), y.len());
            }
        }
    }
}

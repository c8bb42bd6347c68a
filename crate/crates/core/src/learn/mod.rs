//! Classifiers, cross-validation and evaluation metrics.
//!
//! All learners take a [`Matrix`] of samples and a `bool` label per row
//! (`true` = professional) and produce a probability for the positive class.
//! Randomness is drawn from ChaCha streams keyed by `(seed, index)`, so
//! forests and fold loops give the same result in parallel and serial builds.

pub mod boosting;
pub mod cv;
pub mod forest;
pub mod logistic;
pub mod metrics;
pub mod naive_bayes;
pub mod tree;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Standardizer;
use crate::matrix::Matrix;

pub use boosting::{BoostingParams, GradientBoosting};
pub use cv::{cross_validate, evaluate, stratified_kfold, CvOutcome, EvalReport, FoldMetrics, FoldPlan};
pub use forest::{ForestParams, MaxFeatures, RandomForest};
pub use logistic::{LogisticParams, LogisticRegression};
pub use naive_bayes::{GaussianNb, NaiveBayesParams};
pub use tree::DecisionTree;

pub trait Classifier {
    /// Probability of the positive class for one sample.
    fn predict_proba(&self, x: &[f64]) -> f64;

    fn predict_proba_all(&self, x: &Matrix) -> Vec<f64> {
        x.rows().map(|r| self.predict_proba(r)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    GaussianNb,
    LogisticRegression,
    RandomForest,
    GradientBoosting,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::GaussianNb,
        ModelKind::LogisticRegression,
        ModelKind::RandomForest,
        ModelKind::GradientBoosting,
    ];

    pub fn id(self) -> &'static str {
        match self {
            ModelKind::GaussianNb => "gaussian_nb",
            ModelKind::LogisticRegression => "logistic_regression",
            ModelKind::RandomForest => "random_forest",
            ModelKind::GradientBoosting => "gradient_boosting",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ModelKind::GaussianNb => "Gaussian Naive Bayes",
            ModelKind::LogisticRegression => "Logistic Regression",
            ModelKind::RandomForest => "Random Forest",
            ModelKind::GradientBoosting => "Gradient Boosting Classifier",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        let kind = match norm.as_str() {
            "gaussian_nb" | "nb" | "naive_bayes" => ModelKind::GaussianNb,
            "logistic_regression" | "lr" | "logistic" => ModelKind::LogisticRegression,
            "random_forest" | "rf" => ModelKind::RandomForest,
            "gradient_boosting" | "gbc" | "gb" => ModelKind::GradientBoosting,
            _ => return Err(Error::UnknownModel(s.to_string())),
        };
        Ok(kind)
    }
}

impl Serialize for ModelKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.id())
    }
}

impl<'de> Deserialize<'de> for ModelKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Hyperparameters for every learner; each spec uses the block for its kind.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparameters {
    pub gaussian_nb: NaiveBayesParams,
    pub logistic_regression: LogisticParams,
    pub random_forest: ForestParams,
    pub gradient_boosting: BoostingParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    #[serde(default)]
    pub params: Hyperparameters,
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, seed: u64) -> Self {
        ModelSpec {
            kind,
            params: Hyperparameters::default(),
            seed,
        }
    }

    pub fn with_params(mut self, params: Hyperparameters) -> Self {
        self.params = params;
        self
    }

    pub fn fit(&self, x: &Matrix, y: &[bool]) -> Result<Model> {
        check_training_data(x, y)?;
        Ok(match self.kind {
            ModelKind::GaussianNb => Model::NaiveBayes(GaussianNb::fit(x, y, &self.params.gaussian_nb)?),
            ModelKind::LogisticRegression => {
                let scaler = Standardizer::fit_all(x)?;
                let z = scaler.transform(x);
                let lr = LogisticRegression::fit(&z, y, &self.params.logistic_regression)?;
                Model::Logistic { scaler, model: lr }
            }
            ModelKind::RandomForest => Model::Forest(RandomForest::fit(x, y, &self.params.random_forest, self.seed)?),
            ModelKind::GradientBoosting => {
                Model::Boosting(GradientBoosting::fit(x, y, &self.params.gradient_boosting)?)
            }
        })
    }
}

#[derive(Debug, Clone)]
pub enum Model {
    NaiveBayes(GaussianNb),
    /// Logistic regression on features standardized with the training rows'
    /// statistics.
    Logistic {
        scaler: Standardizer,
        model: LogisticRegression,
    },
    Forest(RandomForest),
    Boosting(GradientBoosting),
}

impl Classifier for Model {
    fn predict_proba(&self, x: &[f64]) -> f64 {
        match self {
            Model::NaiveBayes(m) => m.predict_proba(x),
            Model::Logistic { scaler, model } => model.predict_proba(&scaler.transform_row(x)),
            Model::Forest(m) => m.predict_proba(x),
            Model::Boosting(m) => m.predict_proba(x),
        }
    }
}

pub(crate) fn check_training_data(x: &Matrix, y: &[bool]) -> Result<()> {
    if x.n_rows() == 0 {
        return Err(Error::EmptyInput("training matrix"));
    }
    if x.n_rows() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "{} rows but {} labels",
            x.n_rows(),
            y.len()
        )));
    }
    if !x.all_finite() {
        return Err(Error::NonFinite("training matrix"));
    }
    Ok(())
}

pub(crate) fn require_both_classes(y: &[bool]) -> Result<usize> {
    let pos = y.iter().filter(|&&b| b).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::SingleClass);
    }
    Ok(pos)
}

/// Independent random stream for item `index` under `seed`.
pub(crate) fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Mixes a seed with an index into a new seed (SplitMix64 finaliser).
pub(crate) fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean negative log-likelihood of labels under probabilities.
pub fn log_loss(y: &[bool], proba: &[f64]) -> f64 {
    let eps = 1e-15;
    let total: f64 = y
        .iter()
        .zip(proba)
        .map(|(&t, &p)| {
            let p = p.clamp(eps, 1.0 - eps);
            if t {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    total / y.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_kind_parsing() {
        for k in ModelKind::ALL {
            assert_eq!(k.id().parse::<ModelKind>().unwrap(), k);
        }
        assert_eq!("RF".parse::<ModelKind>().unwrap(), ModelKind::RandomForest);
        assert!("svm".parse::<ModelKind>().is_err());
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert!((sigmoid(2.0) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn streams_are_distinct_and_repeatable() {
        use rand::Rng;
        let a: u64 = stream_rng(7, 0).gen();
        let b: u64 = stream_rng(7, 1).gen();
        assert_ne!(a, b);
        assert_eq!(a, stream_rng(7, 0).gen::<u64>());
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
    }

    #[test]
    fn spec_rejects_bad_training_data() {
        let spec = ModelSpec::new(ModelKind::GaussianNb, 0);
        let x = Matrix::column_vector(&[1.0, f64::NAN]);
        assert!(matches!(spec.fit(&x, &[true, false]), Err(Error::NonFinite(_))));
        assert!(matches!(spec.fit(&Matrix::zeros(0, 2), &[]), Err(Error::EmptyInput(_))));
        let x = Matrix::column_vector(&[1.0, 2.0]);
        assert!(spec.fit(&x, &[true]).is_err());
    }
}

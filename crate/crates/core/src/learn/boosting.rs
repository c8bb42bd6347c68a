//! Gradient boosting with logistic loss.
//!
//! Starts from the training log-odds; every stage fits a squared-error
//! regression tree to the residuals `y - p` and sets each leaf to the
//! one-step Newton estimate `sum(r) / sum(p (1 - p))`, shrunk by the
//! learning rate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learn::tree::{grow, Criterion, GrowParams, Tree};
use crate::learn::{check_training_data, log_loss, require_both_classes, sigmoid, Classifier};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoostingParams {
    pub n_stages: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_split: usize,
}

impl Default for BoostingParams {
    fn default() -> Self {
        BoostingParams {
            n_stages: 100,
            max_depth: 3,
            learning_rate: 0.1,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientBoosting {
    init_score: f64,
    learning_rate: f64,
    stages: Vec<Tree>,
    /// Training log loss before the first stage and after each stage.
    pub train_loss: Vec<f64>,
}

impl GradientBoosting {
    pub fn fit(x: &Matrix, y: &[bool], params: &BoostingParams) -> Result<GradientBoosting> {
        check_training_data(x, y)?;
        let positives = require_both_classes(y)?;
        if !params.learning_rate.is_finite() || params.learning_rate < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be finite and non-negative, got {}",
                params.learning_rate
            )));
        }
        let n = x.n_rows();
        let base_rate = positives as f64 / n as f64;
        let init_score = (base_rate / (1.0 - base_rate)).ln();
        let target: Vec<f64> = y.iter().map(|&b| f64::from(u8::from(b))).collect();
        let mut scores = vec![init_score; n];
        let mut proba: Vec<f64> = scores.iter().map(|&s| sigmoid(s)).collect();
        let mut train_loss = vec![log_loss(y, &proba)];
        let grow_params = GrowParams {
            max_depth: Some(params.max_depth),
            min_samples_split: params.min_samples_split,
            max_features: None,
            criterion: Criterion::SquaredError,
        };

        let mut stages = Vec::with_capacity(params.n_stages);
        for _ in 0..params.n_stages {
            let residual: Vec<f64> = target.iter().zip(&proba).map(|(t, p)| t - p).collect();
            let newton = |samples: &[usize]| {
                let (num, den) = samples.iter().fold((0.0, 0.0), |(num, den), &i| {
                    (num + residual[i], den + proba[i] * (1.0 - proba[i]))
                });
                if den.abs() < 1e-150 {
                    0.0
                } else {
                    num / den
                }
            };
            let tree = grow(x, &residual, (0..n).collect(), &grow_params, None, &newton);
            for (i, s) in scores.iter_mut().enumerate() {
                *s += params.learning_rate * tree.predict(x.row(i));
            }
            proba = scores.iter().map(|&s| sigmoid(s)).collect();
            train_loss.push(log_loss(y, &proba));
            stages.push(tree);
        }
        Ok(GradientBoosting {
            init_score,
            learning_rate: params.learning_rate,
            stages,
            train_loss,
        })
    }

    pub fn n_stages(&self) -> usize {
        self.stages.len()
    }

    pub fn decision_function(&self, x: &[f64]) -> f64 {
        self.init_score + self.learning_rate * self.stages.iter().map(|t| t.predict(x)).sum::<f64>()
    }
}

impl Classifier for GradientBoosting {
    fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.decision_function(x))
    }
}

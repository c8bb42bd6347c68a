use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::learn::{check_training_data, require_both_classes, Classifier};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NaiveBayesParams {
    /// Lower bound on every per-class feature variance.
    pub variance_floor: f64,
}

impl Default for NaiveBayesParams {
    fn default() -> Self {
        NaiveBayesParams { variance_floor: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct ClassModel {
    log_prior: f64,
    mean: Vec<f64>,
    var: Vec<f64>,
}

impl ClassModel {
    fn fit(x: &Matrix, rows: &[usize], n_total: usize, floor: f64) -> ClassModel {
        let n = rows.len() as f64;
        let d = x.n_cols();
        let mut mean = vec![0.0; d];
        for &i in rows {
            for (m, v) in mean.iter_mut().zip(x.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for &i in rows {
            for ((s, v), m) in var.iter_mut().zip(x.row(i)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        var.iter_mut().for_each(|s| *s = (*s / n).max(floor));
        ClassModel {
            log_prior: (n / n_total as f64).ln(),
            mean,
            var,
        }
    }

    fn log_joint(&self, x: &[f64]) -> f64 {
        let ll: f64 = x
            .iter()
            .zip(self.mean.iter().zip(&self.var))
            .map(|(v, (m, s))| -0.5 * (2.0 * std::f64::consts::PI * s).ln() - (v - m) * (v - m) / (2.0 * s))
            .sum();
        self.log_prior + ll
    }
}

/// Gaussian naive Bayes with empirical class priors and maximum-likelihood
/// per-class variances.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianNb {
    negative: ClassModel,
    positive: ClassModel,
}

impl GaussianNb {
    pub fn fit(x: &Matrix, y: &[bool], params: &NaiveBayesParams) -> Result<GaussianNb> {
        check_training_data(x, y)?;
        require_both_classes(y)?;
        let (pos, neg): (Vec<usize>, Vec<usize>) = (0..y.len()).partition(|&i| y[i]);
        Ok(GaussianNb {
            negative: ClassModel::fit(x, &neg, y.len(), params.variance_floor),
            positive: ClassModel::fit(x, &pos, y.len(), params.variance_floor),
        })
    }

    /// Posterior `[P(negative | x), P(positive | x)]`, normalised with
    /// log-sum-exp.
    pub fn posterior(&self, x: &[f64]) -> [f64; 2] {
        let a = self.negative.log_joint(x);
        let b = self.positive.log_joint(x);
        let m = a.max(b);
        let log_norm = m + ((a - m).exp() + (b - m).exp()).ln();
        [(a - log_norm).exp(), (b - log_norm).exp()]
    }
}

impl Classifier for GaussianNb {
    fn predict_proba(&self, x: &[f64]) -> f64 {
        self.posterior(x)[1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_dimensional_fixture() {
        let x = Matrix::column_vector(&[0.0, 2.0, 4.0, 6.0]);
        let y = [false, false, true, true];
        let nb = GaussianNb::fit(&x, &y, &NaiveBayesParams::default()).unwrap();
        assert!(nb.predict_proba(&[1.0]) < 0.5);
        assert!(nb.predict_proba(&[5.0]) > 0.5);
        // Means 1 and 5, equal variances and priors: the midpoint is a tie.
        assert!((nb.predict_proba(&[3.0]) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn constant_feature_is_floored() {
        let x = Matrix::from_rows(&[[1.0, 0.0], [1.0, 1.0], [1.0, 5.0], [1.0, 6.0]]).unwrap();
        let y = [false, false, true, true];
        let nb = GaussianNb::fit(&x, &y, &NaiveBayesParams::default()).unwrap();
        let p = nb.predict_proba(&[1.0, 5.5]);
        assert!(p.is_finite() && p > 0.5);
    }

    #[test]
    fn single_class_rejected() {
        let x = Matrix::column_vector(&[0.0, 1.0]);
        assert!(GaussianNb::fit(&x, &[false, false], &NaiveBayesParams::default()).is_err());
    }

    proptest! {
        #[test]
        fn posterior_sums_to_one(vals in proptest::collection::vec(-50.0f64..50.0, 8), probe in -100.0f64..100.0) {
            let x = Matrix::from_rows(&vals.chunks(2).collect::<Vec<_>>()).unwrap();
            let y = [true, false, true, false];
            let nb = GaussianNb::fit(&x, &y, &NaiveBayesParams::default()).unwrap();
            let p = nb.posterior(&[probe, -probe]);
            prop_assert!((p[0] + p[1] - 1.0).abs() < 1e-9);
        }

        #[test]
        fn class_invariant_to_affine_rescaling(
            vals in proptest::collection::vec(-10.0f64..10.0, 12),
            scale in 0.1f64..10.0,
            shift in -5.0f64..5.0,
        ) {
            let rows: Vec<Vec<f64>> = vals.chunks(2).map(|c| c.to_vec()).collect();
            let y = [true, false, true, false, true, false];
            let nb = GaussianNb::fit(&Matrix::from_rows(&rows).unwrap(), &y, &NaiveBayesParams::default()).unwrap();
            let scaled: Vec<Vec<f64>> = rows.iter().map(|r| vec![r[0] * scale + shift, r[1]]).collect();
            let nb2 = GaussianNb::fit(&Matrix::from_rows(&scaled).unwrap(), &y, &NaiveBayesParams::default()).unwrap();
            for (r, s) in rows.iter().zip(&scaled) {
                let (p, q) = (nb.predict_proba(r), nb2.predict_proba(s));
                // Skip numerically tied cases.
                if (p - 0.5).abs() > 1e-6 {
                    prop_assert_eq!(p > 0.5, q > 0.5);
                }
            }
        }
    }
}

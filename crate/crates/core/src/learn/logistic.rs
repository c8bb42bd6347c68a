//! L2-regularised logistic regression fitted by batch gradient ascent with
//! backtracking.
//!
//! The maximised objective is the per-sample average
//! `(1/n) [ sum_i (y_i z_i - softplus(z_i)) - (lambda/2) |w|^2 ]` with
//! `z_i = w . x_i + b`; the intercept is not penalised.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learn::{check_training_data, sigmoid, Classifier};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticParams {
    pub lambda: f64,
    /// Stop once the gradient max-norm drops below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            lambda: 1.0,
            tolerance: 1e-6,
            max_iterations: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticRegression {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each accepted step, starting from the zero model.
    pub objective_trace: Vec<f64>,
}

#[inline]
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Parameter vector layout: weights followed by the bias.
pub fn objective(params: &[f64], x: &Matrix, y: &[bool], lambda: f64) -> f64 {
    let d = x.n_cols();
    let (w, b) = (&params[..d], params[d]);
    let ll: f64 = x
        .rows()
        .zip(y)
        .map(|(row, &t)| {
            let z = dot(w, row) + b;
            (if t { z } else { 0.0 }) - softplus(z)
        })
        .sum();
    let penalty = 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>();
    (ll - penalty) / x.n_rows() as f64
}

/// Gradient of [`objective`] with the same parameter layout.
pub fn gradient(params: &[f64], x: &Matrix, y: &[bool], lambda: f64) -> Vec<f64> {
    let d = x.n_cols();
    let (w, b) = (&params[..d], params[d]);
    let mut g = vec![0.0; d + 1];
    for (row, &t) in x.rows().zip(y) {
        let r = f64::from(u8::from(t)) - sigmoid(dot(w, row) + b);
        for (gj, xj) in g.iter_mut().zip(row) {
            *gj += r * xj;
        }
        g[d] += r;
    }
    for j in 0..d {
        g[j] -= lambda * w[j];
    }
    let n = x.n_rows() as f64;
    g.iter_mut().for_each(|v| *v /= n);
    g
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

impl LogisticRegression {
    /// All-zero model; predicts 0.5 everywhere.
    pub fn zeros(d: usize) -> Self {
        LogisticRegression {
            weights: vec![0.0; d],
            bias: 0.0,
            iterations: 0,
            converged: false,
            objective_trace: Vec::new(),
        }
    }

    pub fn fit(x: &Matrix, y: &[bool], params: &LogisticParams) -> Result<LogisticRegression> {
        check_training_data(x, y)?;
        if !(params.lambda >= 0.0 && params.lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lambda must be >= 0, got {}",
                params.lambda
            )));
        }
        let d = x.n_cols();
        let mut theta = vec![0.0; d + 1];
        let mut value = objective(&theta, x, y, params.lambda);
        let mut trace = vec![value];
        let mut step = 1.0;
        let mut converged = false;
        let mut iterations = 0;

        while iterations < params.max_iterations {
            let g = gradient(&theta, x, y, params.lambda);
            let g_max = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if g_max < params.tolerance {
                converged = true;
                break;
            }
            let g_sq: f64 = g.iter().map(|v| v * v).sum();
            iterations += 1;
            // Armijo backtracking on the ascent direction.
            let mut accepted = false;
            while step > 1e-16 {
                let candidate: Vec<f64> = theta.iter().zip(&g).map(|(t, gi)| t + step * gi).collect();
                let cand_value = objective(&candidate, x, y, params.lambda);
                if cand_value > value + 1e-4 * step * g_sq {
                    theta = candidate;
                    value = cand_value;
                    trace.push(value);
                    accepted = true;
                    step *= 2.0;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }

        let bias = theta.pop().expect("bias slot");
        Ok(LogisticRegression {
            weights: theta,
            bias,
            iterations,
            converged,
            objective_trace: trace,
        })
    }

    pub fn params(&self) -> Vec<f64> {
        let mut p = self.weights.clone();
        p.push(self.bias);
        p
    }
}

impl Classifier for LogisticRegression {
    fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(dot(&self.weights, x) + self.bias)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_give_one_half() {
        let m = LogisticRegression::zeros(3);
        assert_eq!(m.predict_proba(&[1.0, -4.0, 9.0]), 0.5);
    }

    #[test]
    fn separable_pair_monotone_ascent() {
        let x = Matrix::column_vector(&[-1.0, 1.0]);
        let y = [false, true];
        let m = LogisticRegression::fit(&x, &y, &LogisticParams::default()).unwrap();
        assert!(m.objective_trace.len() > 1);
        for w in m.objective_trace.windows(2) {
            assert!(w[1] > w[0]);
        }
        assert!(m.predict_proba(&[1.0]) > 0.5 && m.predict_proba(&[-1.0]) < 0.5);
        // L2 keeps the separable solution finite.
        assert!(m.weights[0].is_finite() && m.converged);
    }

    #[test]
    fn converged_gradient_is_small() {
        let x = Matrix::from_rows(&[
            [0.1, 1.0],
            [0.5, -0.3],
            [-1.2, 0.4],
            [2.0, 0.0],
            [0.3, 0.9],
            [-0.7, -1.1],
        ])
        .unwrap();
        let y = [true, false, false, true, true, false];
        let params = LogisticParams::default();
        let m = LogisticRegression::fit(&x, &y, &params).unwrap();
        assert!(m.converged);
        let g = gradient(&m.params(), &x, &y, params.lambda);
        assert!(g.iter().all(|v| v.abs() < params.tolerance));
    }

    #[test]
    fn rejects_non_finite() {
        let x = Matrix::column_vector(&[1.0, f64::INFINITY]);
        assert!(matches!(
            LogisticRegression::fit(&x, &[true, false], &LogisticParams::default()),
            Err(Error::NonFinite(_))
        ));
    }
}

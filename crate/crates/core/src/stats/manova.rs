use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::stats::TestResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManovaResult {
    #[serde(flatten)]
    pub test: TestResult,
    pub t_squared: f64,
    pub wilks_lambda: f64,
    /// Diagonal ridge added to the pooled covariance, when one was needed.
    pub ridge: Option<f64>,
}

/// Two-group MANOVA through Hotelling's T² with the exact F transform.
///
/// The pooled covariance is factorised as is; only if that fails is a ridge
/// of `1e-8 * trace / p` added to its diagonal.
pub fn manova_two_group(x: &Matrix, groups: &[bool]) -> Result<ManovaResult> {
    if x.n_rows() != groups.len() {
        return Err(Error::InvalidArgument(format!(
            "{} rows but {} group labels",
            x.n_rows(),
            groups.len()
        )));
    }
    if !x.all_finite() {
        return Err(Error::NonFinite("MANOVA input"));
    }
    let p = x.n_cols();
    let n = x.n_rows();
    let n1 = groups.iter().filter(|&&g| g).count();
    let n2 = n - n1;
    if p == 0 {
        return Err(Error::InvalidArgument("MANOVA needs at least one feature".into()));
    }
    if n1 == 0 || n2 == 0 {
        return Err(Error::SingleClass);
    }
    if n < p + 3 {
        return Err(Error::InvalidArgument(format!(
            "MANOVA needs n1 + n2 - 2 > p; got n = {n}, p = {p}"
        )));
    }

    let mut mean1 = DVector::<f64>::zeros(p);
    let mut mean2 = DVector::<f64>::zeros(p);
    for (i, &g) in groups.iter().enumerate() {
        let row = DVector::from_column_slice(x.row(i));
        if g {
            mean1 += row;
        } else {
            mean2 += row;
        }
    }
    mean1 /= n1 as f64;
    mean2 /= n2 as f64;

    let mut scatter = DMatrix::<f64>::zeros(p, p);
    for (i, &g) in groups.iter().enumerate() {
        let row = DVector::from_column_slice(x.row(i));
        let dev = row - if g { &mean1 } else { &mean2 };
        scatter.ger(1.0, &dev, &dev, 1.0);
    }
    let pooled = scatter / (n - 2) as f64;
    let diff = &mean1 - &mean2;

    let (chol, ridge) = match pooled.clone().cholesky() {
        Some(c) => (c, None),
        None => {
            let ridge = 1e-8 * pooled.trace() / p as f64;
            log::warn!("pooled covariance not positive definite; adding ridge {ridge:e}");
            let mut reg = pooled;
            for j in 0..p {
                reg[(j, j)] += ridge;
            }
            match reg.cholesky() {
                Some(c) => (c, Some(ridge)),
                None => return Err(Error::SingularCovariance { ridge }),
            }
        }
    };
    let solved = chol.solve(&diff);
    let quad = diff.dot(&solved).max(0.0);
    let (n, n1, n2, pf) = (n as f64, n1 as f64, n2 as f64, p as f64);
    let t_squared = n1 * n2 / n * quad;
    let f = (n - pf - 1.0) / (pf * (n - 2.0)) * t_squared;
    let wilks_lambda = 1.0 / (1.0 + t_squared / (n - 2.0));
    Ok(ManovaResult {
        test: TestResult::from_f(f, pf, n - pf - 1.0),
        t_squared,
        wilks_lambda,
        ridge,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::anova_two_group;

    #[test]
    fn identical_means() {
        let x = Matrix::from_rows(&[[1.0, 2.0], [3.0, 1.0], [1.0, 2.0], [3.0, 1.0], [2.0, 0.0], [2.0, 0.0]]).unwrap();
        let g = [true, true, false, false, true, false];
        let r = manova_two_group(&x, &g).unwrap();
        assert!(r.t_squared.abs() < 1e-12);
        assert!((r.wilks_lambda - 1.0).abs() < 1e-12);
        assert!(r.test.statistic.abs() < 1e-12);
    }

    #[test]
    fn single_feature_matches_anova() {
        let vals = [1.0, 2.5, 3.0, 4.0, 5.5, 6.0, 2.0, 7.0];
        let g = [false, false, false, true, true, true, false, true];
        let m = manova_two_group(&Matrix::column_vector(&vals), &g).unwrap();
        let a = anova_two_group(&vals, &g).unwrap();
        assert!((m.test.statistic - a.statistic).abs() < 1e-9);
        assert!((m.test.p_value - a.p_value).abs() < 1e-9);
        assert_eq!(m.ridge, None);
    }

    #[test]
    fn two_features_against_hand_inverse() {
        let g1 = [[1.0, 2.0], [2.0, 3.5], [3.0, 3.0], [2.5, 1.0]];
        let g2 = [[4.0, 4.0], [5.0, 6.5], [4.5, 5.0], [6.0, 5.5], [5.5, 4.0]];
        let rows: Vec<[f64; 2]> = g1.iter().chain(&g2).copied().collect();
        let groups: Vec<bool> = (0..rows.len()).map(|i| i < g1.len()).collect();
        let r = manova_two_group(&Matrix::from_rows(&rows).unwrap(), &groups).unwrap();

        let mean = |g: &[[f64; 2]]| {
            let n = g.len() as f64;
            [
                g.iter().map(|r| r[0]).sum::<f64>() / n,
                g.iter().map(|r| r[1]).sum::<f64>() / n,
            ]
        };
        let (m1, m2) = (mean(&g1), mean(&g2));
        let mut s = [[0.0; 2]; 2];
        for (g, m) in [(&g1[..], m1), (&g2[..], m2)] {
            for row in g {
                let d = [row[0] - m[0], row[1] - m[1]];
                for a in 0..2 {
                    for b in 0..2 {
                        s[a][b] += d[a] * d[b];
                    }
                }
            }
        }
        let n = 9.0;
        for row in s.iter_mut() {
            for v in row.iter_mut() {
                *v /= n - 2.0;
            }
        }
        let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
        let inv = [[s[1][1] / det, -s[0][1] / det], [-s[1][0] / det, s[0][0] / det]];
        let d = [m1[0] - m2[0], m1[1] - m2[1]];
        let quad = d[0] * (inv[0][0] * d[0] + inv[0][1] * d[1]) + d[1] * (inv[1][0] * d[0] + inv[1][1] * d[1]);
        let t2 = 4.0 * 5.0 / n * quad;
        let f = (n - 2.0 - 1.0) / (2.0 * (n - 2.0)) * t2;
        assert!((r.t_squared - t2).abs() < 1e-9 * t2);
        assert!((r.test.statistic - f).abs() < 1e-9 * f);
        assert_eq!(r.test.df, (2.0, 6.0));
        assert!((r.wilks_lambda - 1.0 / (1.0 + t2 / 7.0)).abs() < 1e-12);
    }

    #[test]
    fn collinear_columns_use_ridge() {
        let base = [1.0, 2.0, 4.0, 3.0, 6.0, 5.0, 8.0, 7.0];
        let rows: Vec<[f64; 2]> = base.iter().map(|&v| [v, 2.0 * v]).collect();
        let g = [false, false, false, false, true, true, true, true];
        let r = manova_two_group(&Matrix::from_rows(&rows).unwrap(), &g).unwrap();
        assert!(r.ridge.is_some());
        assert!(r.test.statistic.is_finite());
    }

    #[test]
    fn too_many_features() {
        let x = Matrix::from_rows(&[[1.0, 2.0], [2.0, 1.0], [3.0, 5.0]]).unwrap();
        assert!(manova_two_group(&x, &[true, false, true]).is_err());
    }
}

use crate::error::{Error, Result};
use crate::stats::TestResult;

/// One-way ANOVA across `groups`, each needing at least two members.
pub fn anova_oneway(groups: &[&[f64]]) -> Result<TestResult> {
    if groups.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "ANOVA needs at least 2 groups, got {}",
            groups.len()
        )));
    }
    if let Some(g) = groups.iter().find(|g| g.len() < 2) {
        return Err(Error::InvalidArgument(format!(
            "every ANOVA group needs at least 2 members, found one with {}",
            g.len()
        )));
    }
    if groups.iter().any(|g| g.iter().any(|v| !v.is_finite())) {
        return Err(Error::NonFinite("ANOVA input"));
    }
    let n: usize = groups.iter().map(|g| g.len()).sum();
    let grand = groups.iter().flat_map(|g| g.iter()).sum::<f64>() / n as f64;
    let means: Vec<f64> = groups.iter().map(|g| g.iter().sum::<f64>() / g.len() as f64).collect();
    let ssb: f64 = groups
        .iter()
        .zip(&means)
        .map(|(g, m)| g.len() as f64 * (m - grand) * (m - grand))
        .sum();
    let ssw: f64 = groups
        .iter()
        .zip(&means)
        .map(|(g, m)| g.iter().map(|v| (v - m) * (v - m)).sum::<f64>())
        .sum();
    let df_b = (groups.len() - 1) as f64;
    let df_w = (n - groups.len()) as f64;

    let no_spread = groups.iter().all(|g| g.iter().all(|&v| v == g[0]));
    let f = if no_spread {
        let all_equal = means.iter().all(|&m| m == means[0]);
        if all_equal {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (ssb / df_b) / (ssw / df_w)
    };
    Ok(TestResult::from_f(f, df_b, df_w))
}

/// ANOVA of `values` split by a boolean group label.
pub fn anova_two_group(values: &[f64], groups: &[bool]) -> Result<TestResult> {
    if values.len() != groups.len() {
        return Err(Error::InvalidArgument(format!(
            "{} values but {} group labels",
            values.len(),
            groups.len()
        )));
    }
    let (a, b): (Vec<f64>, Vec<f64>) = {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (&v, &g) in values.iter().zip(groups) {
            if g {
                a.push(v)
            } else {
                b.push(v)
            }
        }
        (a, b)
    };
    anova_oneway(&[&b, &a])
}

//! Correlation, one-way ANOVA, two-group MANOVA and the class
//! characterization built on them.

mod anova;
mod characterize;
mod correlation;
mod manova;

use serde::{Deserialize, Serialize};

pub use anova::{anova_oneway, anova_two_group};
pub use characterize::{characterize, CharacterizationReport, ClassSizes, ClassSource, FeatureContrast};
pub use correlation::{correlation_columns, pearson, pearson_matrix, CorrelationMatrix};
pub use manova::{manova_two_group, ManovaResult};

/// Significance level used for every test.
pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    /// F statistic; `f64::INFINITY` when groups differ with zero spread.
    #[serde(with = "finite_or_string")]
    pub statistic: f64,
    pub p_value: f64,
    pub df: (f64, f64),
    pub significant: bool,
}

impl TestResult {
    pub(crate) fn from_f(statistic: f64, df1: f64, df2: f64) -> TestResult {
        let p_value = f_survival(statistic, df1, df2);
        TestResult {
            statistic,
            p_value,
            df: (df1, df2),
            significant: p_value < ALPHA,
        }
    }
}

/// `P(F > f)` for an F(d1, d2) variable, via the regularized incomplete beta
/// function.
pub fn f_survival(f: f64, d1: f64, d2: f64) -> f64 {
    if f.is_nan() {
        return f64::NAN;
    }
    if f <= 0.0 {
        return 1.0;
    }
    if f.is_infinite() {
        return 0.0;
    }
    let x = d2 / (d2 + d1 * f);
    statrs::function::beta::beta_reg(d2 / 2.0, d1 / 2.0, x).clamp(0.0, 1.0)
}

/// JSON has no infinity; the infinite-F sentinel is written as the string
/// `"inf"`.
mod finite_or_string {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("bad statistic `{s}`"))),
        }
    }
}

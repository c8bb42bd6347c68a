use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::stats::{anova_two_group, manova_two_group, ManovaResult, TestResult, ALPHA};

/// Where the professional / non-professional split comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassSource {
    Predictions,
    GroundTruth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassSizes {
    pub professional: usize,
    pub non_professional: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureContrast {
    pub feature: String,
    pub mean_professional: f64,
    pub mean_non_professional: f64,
    pub anova: TestResult,
    /// Significant at the report's alpha.
    pub highlighted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterizationReport {
    pub source: ClassSource,
    pub alpha: f64,
    pub class_sizes: ClassSizes,
    pub features: Vec<FeatureContrast>,
    /// Columns entering the MANOVA: those with non-zero variance.
    pub manova_columns: Vec<String>,
    /// `None` when too few rows remain for the chosen columns.
    pub manova: Option<ManovaResult>,
}

/// Per-class means, per-feature ANOVA and an overall MANOVA for the split
/// given by `professional` (one flag per matrix row).
pub fn characterize(
    matrix: &FeatureMatrix,
    professional: &[bool],
    source: ClassSource,
) -> Result<CharacterizationReport> {
    if professional.len() != matrix.n_rows() {
        return Err(Error::InvalidArgument(format!(
            "{} class flags for {} rows",
            professional.len(),
            matrix.n_rows()
        )));
    }
    let n_pro = professional.iter().filter(|&&p| p).count();
    let n_non = professional.len() - n_pro;
    if n_pro == 0 || n_non == 0 {
        return Err(Error::InvalidArgument(format!(
            "characterization needs both classes; got {n_pro} professional and {n_non} non-professional"
        )));
    }
    let x = &matrix.values;
    let mut features = Vec::with_capacity(matrix.n_cols());
    let mut varying = Vec::new();
    for (j, name) in matrix.column_names.iter().enumerate() {
        let col = x.column(j);
        let (mut sp, mut sn) = (0.0, 0.0);
        for (&v, &p) in col.iter().zip(professional) {
            if p {
                sp += v
            } else {
                sn += v
            }
        }
        let anova = anova_two_group(&col, professional)?;
        if col.iter().any(|&v| v != col[0]) {
            varying.push(j);
        }
        features.push(FeatureContrast {
            feature: name.clone(),
            mean_professional: sp / n_pro as f64,
            mean_non_professional: sn / n_non as f64,
            highlighted: anova.significant,
            anova,
        });
    }
    let manova_columns: Vec<String> = varying.iter().map(|&j| matrix.column_names[j].clone()).collect();
    let manova = if !varying.is_empty() && matrix.n_rows() >= varying.len() + 3 {
        Some(manova_two_group(&x.select_columns(&varying), professional)?)
    } else {
        None
    };
    Ok(CharacterizationReport {
        source,
        alpha: ALPHA,
        class_sizes: ClassSizes {
            professional: n_pro,
            non_professional: n_non,
        },
        features,
        manova_columns,
        manova,
    })
}

fn fmt_stat(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        format!("{v:.4}")
    }
}

impl CharacterizationReport {
    pub fn feature(&self, name: &str) -> Option<&FeatureContrast> {
        self.features.iter().find(|f| f.feature == name)
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let source = match self.source {
            ClassSource::Predictions => "model predictions",
            ClassSource::GroundTruth => "ground-truth labels",
        };
        let _ = writeln!(s, "# Characterization of professional photographers\n");
        let _ = writeln!(
            s,
            "Classes from {source}: {} professional, {} non-professional. Significance at alpha = {}.\n",
            self.class_sizes.professional, self.class_sizes.non_professional, self.alpha
        );
        match &self.manova {
            Some(m) => {
                let _ = writeln!(
                    s,
                    "MANOVA over {} columns: F({}, {}) = {}, p = {:.4e}, Wilks lambda = {:.6}{}.\n",
                    self.manova_columns.len(),
                    m.test.df.0,
                    m.test.df.1,
                    fmt_stat(m.test.statistic),
                    m.test.p_value,
                    m.wilks_lambda,
                    m.ridge.map(|r| format!(", ridge {r:e}")).unwrap_or_default()
                );
            }
            None => {
                let _ = writeln!(s, "MANOVA not computed: too few rows for the varying columns.\n");
            }
        }
        let _ = writeln!(
            s,
            "| feature | professional mean | non-professional mean | F | p | significant |"
        );
        let _ = writeln!(s, "|---|---:|---:|---:|---:|:---:|");
        for f in &self.features {
            let name = if f.highlighted {
                format!("**{}**", f.feature)
            } else {
                f.feature.clone()
            };
            let _ = writeln!(
                s,
                "| {name} | {:.4} | {:.4} | {} | {:.4e} | {} |",
                f.mean_professional,
                f.mean_non_professional,
                fmt_stat(f.anova.statistic),
                f.anova.p_value,
                if f.highlighted { "yes" } else { "no" }
            );
        }
        s
    }

    /// `feature, F, p, significant`.
    pub fn write_anova_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(file));
        w.write_record(["feature", "F", "p", "significant"])?;
        for f in &self.features {
            w.write_record([
                f.feature.as_str(),
                &f.anova.statistic.to_string(),
                &f.anova.p_value.to_string(),
                if f.anova.significant { "true" } else { "false" },
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Long-format class means for grouped bar charts.
    pub fn write_bars_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(file));
        w.write_record(["feature", "class", "mean", "significant"])?;
        for f in &self.features {
            let sig = if f.highlighted { "true" } else { "false" };
            w.write_record([
                f.feature.as_str(),
                "professional",
                &f.mean_professional.to_string(),
                sig,
            ])?;
            w.write_record([
                f.feature.as_str(),
                "non_professional",
                &f.mean_non_professional.to_string(),
                sig,
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureSet;
    use crate::matrix::Matrix;

    fn matrix(rows: &[[f64; 2]]) -> FeatureMatrix {
        FeatureMatrix {
            feature_set: FeatureSet::User,
            column_names: vec!["a".into(), "b".into()],
            user_ids: (0..rows.len()).map(|i| format!("u{i}")).collect(),
            values: Matrix::from_rows(rows).unwrap(),
        }
    }

    #[test]
    fn identical_features_not_significant() {
        let m = matrix(&[[1.0, 2.0]; 6]);
        let r = characterize(&m, &[true, true, false, false, false, true], ClassSource::Predictions).unwrap();
        assert!(r.features.iter().all(|f| !f.highlighted));
        assert!(r.manova.is_none());
        assert_eq!(r.class_sizes.professional + r.class_sizes.non_professional, 6);
    }

    #[test]
    fn shifted_feature_is_highlighted() {
        let m = matrix(&[
            [1.0, 5.0],
            [1.2, 4.0],
            [0.9, 6.0],
            [1.1, 5.5],
            [9.0, 5.0],
            [9.2, 4.5],
            [8.9, 6.0],
            [9.1, 5.0],
        ]);
        let flags = [false, false, false, false, true, true, true, true];
        let r = characterize(&m, &flags, ClassSource::GroundTruth).unwrap();
        let a = r.feature("a").unwrap();
        assert!(a.highlighted && a.mean_professional > a.mean_non_professional);
        assert!(!r.feature("b").unwrap().highlighted);
        assert!(r.manova.as_ref().unwrap().test.significant);
        assert!(r.to_markdown().contains("**a**"));
    }

    #[test]
    fn empty_class_rejected() {
        let m = matrix(&[[1.0, 2.0], [2.0, 3.0]]);
        assert!(characterize(&m, &[false, false], ClassSource::Predictions).is_err());
    }
}

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FeatureSet};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub column_names: Vec<String>,
    /// Row-major, `n x n`.
    pub r: Vec<Vec<f64>>,
    /// Columns with zero variance; their off-diagonal entries are 0.
    pub constant_columns: Vec<String>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.column_names.iter().position(|c| c == a)?;
        let j = self.column_names.iter().position(|c| c == b)?;
        Some(self.r[i][j])
    }

    /// Square CSV with a header row and the column name as the first field
    /// of every row.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(file));
        w.write_record(std::iter::once("feature").chain(self.column_names.iter().map(String::as_str)))?;
        for (name, row) in self.column_names.iter().zip(&self.r) {
            let mut rec = vec![name.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Long format (`row, column, r`), one line per cell, for heatmaps.
    pub fn write_long_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(file));
        w.write_record(["row", "column", "r"])?;
        for (a, row) in self.column_names.iter().zip(&self.r) {
            for (b, v) in self.column_names.iter().zip(row) {
                w.write_record([a.as_str(), b.as_str(), &v.to_string()])?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Social-activity summaries followed by the photo score summaries.
pub fn correlation_columns() -> Vec<String> {
    let mut cols = FeatureSet::SocialActivity.column_names();
    cols.extend(FeatureSet::AestheticTechnical.column_names());
    cols
}

/// Pearson r of two equal-length samples, or `None` when either is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

fn is_constant(col: &[f64]) -> bool {
    col.iter().all(|&v| v == col[0])
}

/// Pairwise Pearson correlation of the columns of `x`.
pub fn pearson_matrix(x: &Matrix, column_names: &[String]) -> Result<CorrelationMatrix> {
    if x.n_rows() < 2 {
        return Err(Error::InvalidArgument(format!(
            "correlation needs at least 2 rows, got {}",
            x.n_rows()
        )));
    }
    if column_names.len() != x.n_cols() {
        return Err(Error::InvalidArgument(
            "column names do not match the matrix width".into(),
        ));
    }
    if !x.all_finite() {
        return Err(Error::NonFinite("correlation input"));
    }
    let d = x.n_cols();
    let cols: Vec<Vec<f64>> = (0..d).map(|j| x.column(j)).collect();
    let constant: Vec<bool> = cols.iter().map(|c| is_constant(c)).collect();
    let mut constant_columns = Vec::new();
    for (name, &c) in column_names.iter().zip(&constant) {
        if c {
            log::warn!("column `{name}` is constant; its correlations are reported as 0");
            constant_columns.push(name.clone());
        }
    }
    let mut r = vec![vec![0.0; d]; d];
    for i in 0..d {
        r[i][i] = 1.0;
        for j in i + 1..d {
            let v = if constant[i] || constant[j] {
                0.0
            } else {
                pearson(&cols[i], &cols[j]).unwrap_or(0.0)
            };
            r[i][j] = v;
            r[j][i] = v;
        }
    }
    Ok(CorrelationMatrix {
        column_names: column_names.to_vec(),
        r,
        constant_columns,
    })
}

impl FeatureMatrix {
    /// Correlation of the named columns of this matrix.
    pub fn correlation(&self, columns: &[String]) -> Result<CorrelationMatrix> {
        let idx = columns
            .iter()
            .map(|c| {
                self.column_index(c)
                    .ok_or_else(|| Error::InvalidArgument(format!("column `{c}` not in the matrix")))
            })
            .collect::<Result<Vec<_>>>()?;
        pearson_matrix(&self.values.select_columns(&idx), columns)
    }
}

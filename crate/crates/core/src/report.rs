//! Table-shaped summaries of the evaluation reports.

use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::learn::{EvalReport, ModelKind};
use crate::pipeline::paths;

/// The model and the two feature sets compared in the score-versus-social
/// table.
pub const TABLE3_MODEL: ModelKind = ModelKind::RandomForest;
pub const TABLE3_SETS: [FeatureSet; 2] = [FeatureSet::AestheticTechnical, FeatureSet::SocialActivity];

pub const TABLE2_CSV: &str = "reports/table2.csv";
pub const TABLE2_MD: &str = "reports/table2.md";
pub const TABLE3_CSV: &str = "reports/table3.csv";
pub const TABLE3_MD: &str = "reports/table3.md";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub model: ModelKind,
    pub feature_set: FeatureSet,
    pub accuracy: f64,
    pub auc: f64,
    pub f1: f64,
    pub f1_weighted: f64,
}

fn find(reports: &[EvalReport], model: ModelKind, set: FeatureSet) -> Result<TableRow> {
    reports
        .iter()
        .find(|r| r.model == model && r.feature_set == Some(set))
        .map(|r| TableRow {
            model,
            feature_set: set,
            accuracy: r.accuracy,
            auc: r.auc,
            f1: r.f1,
            f1_weighted: r.f1_weighted,
        })
        .ok_or_else(|| Error::InvalidArgument(format!("no evaluation report for {model} on {set}")))
}

/// One row per (model, feature set), models outermost.
pub fn table2(reports: &[EvalReport], models: &[ModelKind], sets: &[FeatureSet]) -> Result<Vec<TableRow>> {
    let mut rows = Vec::with_capacity(models.len() * sets.len());
    for &m in models {
        for &s in sets {
            rows.push(find(reports, m, s)?);
        }
    }
    Ok(rows)
}

pub fn table3(reports: &[EvalReport]) -> Result<Vec<TableRow>> {
    TABLE3_SETS.iter().map(|&s| find(reports, TABLE3_MODEL, s)).collect()
}

fn write_csv(path: &Path, rows: &[TableRow]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(["model", "feature_set", "accuracy", "auc", "f1", "f1_weighted"])?;
    for r in rows {
        w.write_record([
            r.model.id(),
            r.feature_set.id(),
            &r.accuracy.to_string(),
            &r.auc.to_string(),
            &r.f1.to_string(),
            &r.f1_weighted.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn markdown(title: &str, rows: &[TableRow]) -> String {
    let mut s = format!("# {title}\n\n");
    s.push_str("| Model | Features | Accuracy | AUC | F1 | F1 (weighted) |\n");
    s.push_str("|---|---|---:|---:|---:|---:|\n");
    for r in rows {
        let _ = writeln!(
            s,
            "| {} | {} | {:.2} | {:.2} | {:.2} | {:.2} |",
            r.model.label(),
            r.feature_set.label(),
            r.accuracy,
            r.auc,
            r.f1,
            r.f1_weighted
        );
    }
    s
}

/// Reads `eval/reports.json` under `run_dir` and writes both tables as CSV
/// and markdown. Returns the written paths relative to `run_dir`.
pub fn emit_reports(run_dir: &Path, models: &[ModelKind], sets: &[FeatureSet]) -> Result<Vec<String>> {
    let src = run_dir.join(paths::REPORTS);
    let text = std::fs::read_to_string(&src).map_err(|e| Error::io(&src, e))?;
    let reports: Vec<EvalReport> = serde_json::from_str(&text)?;
    let t2 = table2(&reports, models, sets)?;
    let t3 = table3(&reports)?;
    let dir = run_dir.join("reports");
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    write_csv(&run_dir.join(TABLE2_CSV), &t2)?;
    write_csv(&run_dir.join(TABLE3_CSV), &t3)?;
    for (rel, title, rows) in [
        (TABLE2_MD, "Model comparison by feature set", &t2),
        (TABLE3_MD, "Aesthetic and technical scores versus social activity", &t3),
    ] {
        let p = run_dir.join(rel);
        std::fs::write(&p, markdown(title, rows)).map_err(|e| Error::io(&p, e))?;
    }
    Ok(vec![
        TABLE2_CSV.into(),
        TABLE2_MD.into(),
        TABLE3_CSV.into(),
        TABLE3_MD.into(),
    ])
}

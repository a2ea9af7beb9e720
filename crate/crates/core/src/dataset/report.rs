//! CSV tables and the JSON run report.
//!
//! Column order is fixed. Numbers use the shortest decimal form that reads
//! back to the same `f64`, so reruns produce identical bytes.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::aggregation::{BestWorst, EvaluationRecord, PrecisionReport, SweepCurve, ThresholdSpec};
use crate::error::{Error, Result};

/// Precision rows of one method, one per threshold spec.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MethodReport {
    pub method: String,
    pub missing: Vec<String>,
    pub precision: Vec<PrecisionReport>,
    /// Present when the method supplied several hypotheses per sample.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_worst: Option<Vec<BestWorst>>,
}

fn num(v: f64) -> String {
    v.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn write_csv(path: &Path, header: Vec<String>, rows: Vec<Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format(path, format!("{other:?}")),
    }
}

/// Overall precision: one row per spec, one column per method.
pub fn write_table1(path: &Path, specs: &[ThresholdSpec], methods: &[MethodReport]) -> Result<()> {
    let mut header = vec!["thresholds".to_string()];
    header.extend(methods.iter().map(|m| m.method.clone()));
    let rows = specs
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let mut row = vec![spec.label()];
            row.extend(methods.iter().map(|m| num(m.precision[i].overall)));
            row
        })
        .collect();
    write_csv(path, header, rows)
}

/// Categories that appear in any report, sorted.
pub fn category_columns(methods: &[MethodReport]) -> Vec<String> {
    let set: BTreeSet<&String> = methods
        .iter()
        .flat_map(|m| m.precision.iter().flat_map(|p| p.per_category.keys()))
        .collect();
    set.into_iter().cloned().collect()
}

/// Per-category precision: one row per (method, spec).
pub fn write_table2(path: &Path, methods: &[MethodReport]) -> Result<()> {
    let cats = category_columns(methods);
    let mut header = vec!["method".to_string(), "thresholds".to_string()];
    header.extend(cats.iter().cloned());
    let mut rows = Vec::new();
    for m in methods {
        for p in &m.precision {
            let mut row = vec![m.method.clone(), p.spec.label()];
            row.extend(cats.iter().map(|c| opt(p.per_category.get(c).map(|c| c.precision))));
            rows.push(row);
        }
    }
    write_csv(path, header, rows)
}

/// One method's precision with counts and per-category columns.
pub fn write_precision_csv(path: &Path, report: &MethodReport) -> Result<()> {
    let cats = category_columns(std::slice::from_ref(report));
    let mut header: Vec<String> = ["thresholds", "n", "correct", "overall"].map(String::from).into();
    header.extend(cats.iter().cloned());
    let rows = report
        .precision
        .iter()
        .map(|p| {
            let mut row = vec![p.spec.label(), p.n.to_string(), p.correct.to_string(), num(p.overall)];
            row.extend(cats.iter().map(|c| opt(p.per_category.get(c).map(|c| c.precision))));
            row
        })
        .collect();
    write_csv(path, header, rows)
}

/// Every per-sample metric value.
pub fn write_records_csv(path: &Path, records: &[EvaluationRecord]) -> Result<()> {
    let header = [
        "sample_id",
        "category",
        "hypothesis",
        "failed",
        "rotation_error_deg",
        "translation_error_m",
        "iou",
        "fscore",
        "chamfer_m",
    ]
    .map(String::from)
    .into();
    let rows = records
        .iter()
        .map(|r| {
            vec![
                r.sample_id.clone(),
                r.category.name.clone(),
                r.metadata.hypothesis.to_string(),
                r.failed.to_string(),
                num(r.rotation_error),
                num(r.translation_error),
                opt(r.iou),
                opt(r.fscore),
                opt(r.chamfer),
            ]
        })
        .collect();
    write_csv(path, header, rows)
}

pub fn write_best_worst_csv(path: &Path, specs: &[ThresholdSpec], rows: &[BestWorst]) -> Result<()> {
    let header = ["thresholds", "n", "best", "worst"].map(String::from).into();
    let rows = specs
        .iter()
        .zip(rows)
        .map(|(s, bw)| vec![s.label(), bw.n.to_string(), num(bw.best), num(bw.worst)])
        .collect();
    write_csv(path, header, rows)
}

/// Sweep curves of several methods over a shared grid: `threshold,<methods>`.
pub fn write_sweep_csv(path: &Path, curves: &[(String, SweepCurve)]) -> Result<()> {
    let mut header = vec!["threshold".to_string()];
    header.extend(curves.iter().map(|(m, _)| m.clone()));
    let grid: Vec<f64> = curves
        .first()
        .map(|(_, c)| c.points.iter().map(|p| p.threshold).collect())
        .unwrap_or_default();
    if curves.iter().any(|(_, c)| c.points.len() != grid.len()) {
        return Err(Error::Config("sweep curves have different grids".into()));
    }
    let rows = grid
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let mut row = vec![num(*t)];
            row.extend(curves.iter().map(|(_, c)| num(c.points[i].precision)));
            row
        })
        .collect();
    write_csv(path, header, rows)
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json_report<T: Serialize + ?Sized>(path: &Path, report: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report).map_err(|e| Error::format(path, e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

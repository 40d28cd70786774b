//! CSV outputs: long-format metrics, a wide per-iteration log, and a
//! per-iteration summary across replicates.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::BenchError;
use crate::metrics::{feasible_fraction, optimality_gap, RunRecord};
use crate::problem::Problem;

pub const METRICS_FILE: &str = "metrics.csv";
pub const RUNS_FILE: &str = "runs.csv";
pub const SUMMARY_FILE: &str = "summary.csv";

pub const GAP: &str = "optimality_gap";
pub const FEASIBLE: &str = "feasible_fraction";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub method: String,
    pub seed: u64,
    pub iter: usize,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: String,
    pub iter: usize,
    pub metric: String,
    pub mean: f64,
    /// Sample standard deviation across replicates (0 for one replicate).
    pub std: f64,
}

pub fn metric_rows(records: &[RunRecord], problem: &Problem) -> Vec<MetricRow> {
    let mut rows = Vec::new();
    for rec in records {
        let series = [(GAP, optimality_gap(rec, problem)), (FEASIBLE, feasible_fraction(rec))];
        for (name, values) in series {
            for (k, v) in values.into_iter().enumerate() {
                rows.push(MetricRow {
                    method: rec.method.clone(),
                    seed: rec.seed,
                    iter: k + 1,
                    metric: name.into(),
                    value: v,
                });
            }
        }
    }
    rows
}

/// Mean and sample standard deviation per `(method, iter, metric)`, with
/// methods and metrics in order of first appearance.
pub fn summarize_rows(rows: &[MetricRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(String, String)> = Vec::new();
    for r in rows {
        let key = (r.method.clone(), r.metric.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let mut out = Vec::new();
    for (method, metric) in keys {
        let mut by_iter: Vec<Vec<f64>> = Vec::new();
        for r in rows.iter().filter(|r| r.method == method && r.metric == metric) {
            if by_iter.len() < r.iter {
                by_iter.resize(r.iter, Vec::new());
            }
            by_iter[r.iter - 1].push(r.value);
        }
        for (k, vals) in by_iter.iter().enumerate().filter(|(_, v)| !v.is_empty()) {
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let std = if vals.len() > 1 {
                (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            out.push(SummaryRow {
                method: method.clone(),
                iter: k + 1,
                metric: metric.clone(),
                mean,
                std,
            });
        }
    }
    out
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| BenchError::csv(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| BenchError::csv(path, e))?;
    }
    w.flush().map_err(|e| BenchError::io(path, e))
}

fn fmt_point(x: &[f64]) -> String {
    x.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";")
}

fn write_runs(path: &Path, records: &[RunRecord], problem: &Problem) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| BenchError::csv(path, e))?;
    let err = |e| BenchError::csv(path, e);
    w.write_record([
        "method", "seed", "iter", "x_i", "x_j", "winner", "auto_won", "c_i", "c_j", "f_i", "f_j",
        "feasible_i", "feasible_j", GAP, FEASIBLE,
    ])
    .map_err(err)?;
    for rec in records {
        let gap = optimality_gap(rec, problem);
        let feas = feasible_fraction(rec);
        for (k, r) in rec.rows.iter().enumerate() {
            let winner = match r.winner {
                cpbo_core::Winner::I => "i",
                cpbo_core::Winner::J => "j",
            };
            w.write_record([
                rec.method.clone(),
                rec.seed.to_string(),
                r.n.to_string(),
                fmt_point(&r.x_i),
                fmt_point(&r.x_j),
                winner.to_string(),
                r.auto_won.to_string(),
                r.c_i.to_string(),
                r.c_j.to_string(),
                r.f_i.to_string(),
                r.f_j.to_string(),
                r.feasible_i.to_string(),
                r.feasible_j.to_string(),
                gap[k].to_string(),
                feas[k].to_string(),
            ])
            .map_err(err)?;
        }
    }
    w.flush().map_err(|e| BenchError::io(path, e))
}

pub fn write_outputs(records: &[RunRecord], problem: &Problem, out: &Path) -> Result<(), BenchError> {
    fs::create_dir_all(out).map_err(|e| BenchError::io(out, e))?;
    let rows = metric_rows(records, problem);
    write_csv(&out.join(METRICS_FILE), &rows)?;
    write_runs(&out.join(RUNS_FILE), records, problem)?;
    write_csv(&out.join(SUMMARY_FILE), &summarize_rows(&rows))
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricRow>, BenchError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| BenchError::csv(path, e))?;
    r.deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| BenchError::csv(path, e))
}

/// Recompute `summary.csv` from the `metrics.csv` in `dir`.
pub fn summarize_dir(dir: &Path) -> Result<Vec<SummaryRow>, BenchError> {
    let rows = read_metrics(&dir.join(METRICS_FILE))?;
    let summary = summarize_rows(&rows);
    write_csv(&dir.join(SUMMARY_FILE), &summary)?;
    Ok(summary)
}

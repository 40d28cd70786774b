//! Per-iteration metrics over a run.

use cpbo_core::Winner;
use serde::Serialize;

use crate::problem::Problem;

/// One iteration of a run, in native coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRow {
    pub n: usize,
    pub x_i: Vec<f64>,
    pub x_j: Vec<f64>,
    pub winner: Winner,
    pub auto_won: bool,
    pub c_i: f64,
    pub c_j: f64,
    pub f_i: f64,
    pub f_j: f64,
    pub feasible_i: bool,
    pub feasible_j: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub method: String,
    pub seed: u64,
    pub rows: Vec<RunRow>,
    /// Constraint-surrogate evaluations made by the engine during the run.
    pub constraint_queries: usize,
}

/// `f_opt` minus the best objective among truly feasible points seen so far,
/// with `f_min` standing in while none has been seen.
pub fn optimality_gap(record: &RunRecord, problem: &Problem) -> Vec<f64> {
    let mut best = problem.f_min;
    record
        .rows
        .iter()
        .map(|r| {
            for (f, ok) in [(r.f_i, r.feasible_i), (r.f_j, r.feasible_j)] {
                if ok && f > best {
                    best = f;
                }
            }
            problem.f_opt - best
        })
        .collect()
}

/// Share of the `2n` points sampled up to iteration `n` that are feasible.
pub fn feasible_fraction(record: &RunRecord) -> Vec<f64> {
    let mut count = 0usize;
    record
        .rows
        .iter()
        .enumerate()
        .map(|(k, r)| {
            count += usize::from(r.feasible_i) + usize::from(r.feasible_j);
            count as f64 / (2 * (k + 1)) as f64
        })
        .collect()
}

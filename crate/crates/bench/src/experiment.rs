//! Replicated runs of the optimization loop against a simulated chooser.

use std::path::Path;

use cpbo_core::rng::stream_rng;
use cpbo_core::{Engine, EngineConfig, Policy};
use rayon::prelude::*;

use crate::error::BenchError;
use crate::metrics::{RunRecord, RunRow};
use crate::oracle::{choose, OracleConfig};
use crate::output::write_outputs;
use crate::problem::Problem;

const ORACLE_STREAM: u64 = 0x6f72_6163;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub methods: Vec<Policy>,
    pub runs: usize,
    pub iters: usize,
    pub warm_points: usize,
    pub oracle: OracleConfig,
    pub seed: u64,
    pub raw_samples: usize,
    pub num_restarts: usize,
}

impl ExperimentConfig {
    pub fn new(methods: Vec<Policy>, warm_points: usize, seed: u64) -> Self {
        Self {
            methods,
            runs: 20,
            iters: 50,
            warm_points,
            oracle: OracleConfig::Noiseless,
            seed,
            raw_samples: 512,
            num_restarts: 3,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.methods.is_empty() {
            return Err(BenchError::Config("at least one method is required".into()));
        }
        if self.runs == 0 || self.iters == 0 {
            return Err(BenchError::Config("runs and iters must be positive".into()));
        }
        if self.num_restarts == 0 || self.raw_samples < self.num_restarts {
            return Err(BenchError::Config("raw samples must be at least the restart count".into()));
        }
        self.oracle.validate().map_err(BenchError::Config)
    }

    /// Seed of replicate `run`; shared by all methods so they see the same
    /// warm-start sample and first random pair.
    pub fn run_seed(&self, run: usize) -> u64 {
        self.seed.wrapping_add(run as u64)
    }
}

/// One engine loop of `cfg.iters` iterations.
pub fn run_single(
    problem: &Problem,
    policy: Policy,
    cfg: &ExperimentConfig,
    run: usize,
) -> Result<RunRecord, BenchError> {
    let seed = cfg.run_seed(run);
    let mut engine_cfg = EngineConfig::new(problem.dims, policy, problem.lambda, seed);
    engine_cfg.raw_samples = cfg.raw_samples;
    engine_cfg.num_restarts = cfg.num_restarts;
    let constraint = |u: &[f64]| problem.constraint(&problem.to_native(u));
    let mut engine = Engine::with_warm_start(engine_cfg, constraint, cfg.warm_points)?;
    let mut oracle_rng = stream_rng(seed, ORACLE_STREAM, 0);
    let mut rows = Vec::with_capacity(cfg.iters);
    for _ in 0..cfg.iters {
        let rec = engine.step(constraint, |a, b| {
            let fa = problem.objective(&problem.to_native(a));
            let fb = problem.objective(&problem.to_native(b));
            choose(fa, fb, cfg.oracle, &mut oracle_rng)
        })?;
        let (x_i, x_j) = (problem.to_native(&rec.x_i), problem.to_native(&rec.x_j));
        rows.push(RunRow {
            n: rec.n,
            f_i: problem.objective(&x_i),
            f_j: problem.objective(&x_j),
            feasible_i: rec.c_i >= problem.lambda,
            feasible_j: rec.c_j >= problem.lambda,
            x_i,
            x_j,
            winner: rec.winner,
            auto_won: rec.auto_won,
            c_i: rec.c_i,
            c_j: rec.c_j,
        });
    }
    Ok(RunRecord {
        method: policy.name().into(),
        seed,
        rows,
        constraint_queries: engine.constraint_queries(),
    })
}

/// All `methods x runs` replicates, in parallel, returned in method-major
/// order regardless of scheduling.
pub fn run_all(problem: &Problem, cfg: &ExperimentConfig) -> Result<Vec<RunRecord>, BenchError> {
    cfg.validate()?;
    let jobs: Vec<(Policy, usize)> = cfg
        .methods
        .iter()
        .flat_map(|&m| (0..cfg.runs).map(move |r| (m, r)))
        .collect();
    jobs.par_iter()
        .map(|&(m, r)| run_single(problem, m, cfg, r))
        .collect()
}

/// Run everything and write `metrics.csv`, `runs.csv` and `summary.csv`
/// under `out`.
pub fn run_experiment(
    problem: &Problem,
    cfg: &ExperimentConfig,
    out: &Path,
) -> Result<Vec<RunRecord>, BenchError> {
    let records = run_all(problem, cfg)?;
    write_outputs(&records, problem, out)?;
    Ok(records)
}

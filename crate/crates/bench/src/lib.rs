//! Benchmark harness: synthetic constrained problems, simulated choosers,
//! metrics, and a replicated experiment driver writing CSV files.

pub mod error;
pub mod experiment;
pub mod metrics;
pub mod oracle;
pub mod output;
pub mod problem;

pub use error::BenchError;
pub use experiment::{run_all, run_experiment, run_single, ExperimentConfig};
pub use metrics::{feasible_fraction, optimality_gap, RunRecord, RunRow};
pub use oracle::{simulate_choice, OracleConfig};
pub use problem::{gardner2d, hartmann6c, refmatch6, Problem, ProblemKind};

//! Constrained preferential Bayesian optimization.
//!
//! The objective is observed only through pairwise preferences and is modelled
//! by a Gaussian process with a Thurstone–Mosteller likelihood
//! ([`pref`]). The constraint `c(x) >= lambda` is observed directly and modelled
//! by Gaussian-process regression ([`gp`]). Each iteration proposes the pair
//! maximizing EUBOC, the expected utility of the best option weighted by the
//! probability that both candidates are feasible ([`acquisition`]). The loop
//! itself, including warm-starting of the constraint surrogate and the
//! baseline policies, lives in [`engine`].
//!
//! All points handed to the models are in the unit box `[0, 1]^N`.

pub mod acquisition;
pub mod engine;
pub mod error;
pub mod gp;
pub mod kernel;
mod linalg;
pub mod optimize;
pub mod pref;
pub mod rng;
pub mod stats;



pub use error::{Error, Result};
pub use engine::{Engine, EngineConfig, History, HistoryRecord, Policy, WarmStart, Winner};
pub use gp::{GpFitConfig, GpModel, HyperPriors, PredictiveDistribution};
pub use kernel::{KernelKind, KernelSpec};
pub use acquisition::{AcqConfig, AcqPolicy, PairProposal, PairStats};
pub use pref::{Comparison, LatentPosterior, PrefFitConfig, PrefModel, PreferenceDataset};


//! Simulated choosers.

use cpbo_core::stats::norm_cdf;
use cpbo_core::Winner;
use rand::Rng;

use crate::problem::Problem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleConfig {
    /// The truly better point wins; exact ties are broken uniformly.
    Noiseless,
    /// `x_i` wins with probability `Phi((f_i - f_j) / (sqrt(2) sigma))`.
    Thurstone { sigma: f64 },
}

impl OracleConfig {
    pub fn validate(&self) -> Result<(), String> {
        match self {
            OracleConfig::Thurstone { sigma } if !(sigma.is_finite() && *sigma > 0.0) => {
                Err(format!("thurstone noise must be positive, got {sigma}"))
            }
            _ => Ok(()),
        }
    }
}

impl std::fmt::Display for OracleConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OracleConfig::Noiseless => f.write_str("noiseless"),
            OracleConfig::Thurstone { sigma } => write!(f, "thurstone:{sigma}"),
        }
    }
}

impl std::str::FromStr for OracleConfig {
    type Err = String;

    /// `noiseless` or `thurstone:<sigma>`.
    fn from_str(s: &str) -> Result<Self, String> {
        let cfg = match s.split_once(':') {
            None if s == "noiseless" => OracleConfig::Noiseless,
            Some(("thurstone", sigma)) => OracleConfig::Thurstone {
                sigma: sigma
                    .parse()
                    .map_err(|_| format!("bad thurstone noise level {sigma:?}"))?,
            },
            _ => return Err(format!("unknown oracle {s:?} (expected noiseless or thurstone:<sigma>)")),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Winner between two native points.
pub fn simulate_choice<R: Rng>(
    problem: &Problem,
    xi: &[f64],
    xj: &[f64],
    oracle: OracleConfig,
    rng: &mut R,
) -> Winner {
    choose(problem.objective(xi), problem.objective(xj), oracle, rng)
}

pub fn choose<R: Rng>(fi: f64, fj: f64, oracle: OracleConfig, rng: &mut R) -> Winner {
    let p_i = match oracle {
        OracleConfig::Noiseless if fi > fj => return Winner::I,
        OracleConfig::Noiseless if fj > fi => return Winner::J,
        OracleConfig::Noiseless => 0.5,
        OracleConfig::Thurstone { sigma } => norm_cdf((fi - fj) / (std::f64::consts::SQRT_2 * sigma)),
    };
    if rng.random::<f64>() < p_i {
        Winner::I
    } else {
        Winner::J
    }
}

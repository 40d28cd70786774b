//! EUBO and EUBOC acquisition values and their maximization over pairs.
//!
//! For a pair `(x_i, x_j)` with latent utilities jointly Gaussian under the
//! preference surrogate, EUBO is `E[max(f_i, f_j)]`, which has the closed form
//! `Delta Phi(Delta / sigma) + sigma phi(Delta / sigma) + mu_j` with
//! `Delta = mu_i - mu_j` and `sigma^2 = Var[f_i - f_j]`. EUBOC multiplies it by
//! the probability that both points are feasible, approximated by the product
//! of the marginal probabilities `P(c(x) >= lambda)`.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{GpModel, PredictiveDistribution};
use crate::optimize::{minimize_box, LbfgsbOptions};
use crate::pref::{PairMoments, PrefModel};
use crate::rng::{stream_rng, streams};
use crate::stats::{norm_cdf, norm_pdf};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairStats {
    /// `E[f(x_i) - f(x_j)]`.
    pub delta: f64,
    /// Standard deviation of `f(x_i) - f(x_j)`, floored.
    pub sigma_pair: f64,
    /// `E[f(x_j)]`.
    pub mu_second: f64,
}

impl PairStats {
    pub fn from_moments(mean: [f64; 2], var: [f64; 2], cov: f64, sigma_floor: f64) -> Result<Self> {
        let v = var[0] + var[1] - 2.0 * cov;
        let scale = var[0].abs() + var[1].abs() + 1.0;
        if !v.is_finite() || v < -1e-8 * scale {
            return Err(Error::numerical(format!("negative pair variance {v}")));
        }
        Ok(Self {
            delta: mean[0] - mean[1],
            sigma_pair: v.max(0.0).sqrt().max(sigma_floor),
            mu_second: mean[1],
        })
    }
}

/// Pair statistics from a two-point predictive distribution.
pub fn pair_stats(pred: &PredictiveDistribution, sigma_floor: f64) -> Result<PairStats> {
    if pred.means.len() != 2 || pred.covariance.shape() != (2, 2) {
        return Err(Error::invalid("pair statistics need a two-point predictive distribution"));
    }
    PairStats::from_moments(
        [pred.means[0], pred.means[1]],
        [pred.covariance[(0, 0)], pred.covariance[(1, 1)]],
        pred.covariance[(0, 1)],
        sigma_floor,
    )
}

pub fn eubo(ps: &PairStats) -> f64 {
    let u = ps.delta / ps.sigma_pair;
    ps.delta * norm_cdf(u) + ps.sigma_pair * norm_pdf(u) + ps.mu_second
}

/// `P(c >= lambda)` for `c ~ N(mu, sd^2)`; a hard indicator when `sd` is 0.
pub fn feasibility_factor(mu: f64, sd: f64, lambda: f64) -> f64 {
    if sd > 0.0 {
        norm_cdf((mu - lambda) / sd)
    } else if mu >= lambda {
        1.0
    } else {
        0.0
    }
}

/// Probability that both points are feasible, treating the two constraint
/// values as independent.
pub fn feasibility_prob(mu_i: f64, sd_i: f64, mu_j: f64, sd_j: f64, lambda: f64) -> f64 {
    feasibility_factor(mu_i, sd_i, lambda) * feasibility_factor(mu_j, sd_j, lambda)
}

pub fn euboc(ps: &PairStats, feas: f64) -> f64 {
    feas * eubo(ps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AcqPolicy {
    Eubo,
    Euboc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcqConfig {
    pub lambda: f64,
    pub num_restarts: usize,
    pub raw_samples: usize,
    pub sigma_floor: f64,
    pub seed: u64,
}

impl Default for AcqConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            num_restarts: 3,
            raw_samples: 512,
            sigma_floor: 1e-6,
            seed: 0,
        }
    }
}

impl AcqConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_restarts == 0 || self.raw_samples < self.num_restarts {
            return Err(Error::invalid(format!(
                "need raw_samples ({}) >= num_restarts ({}) >= 1",
                self.raw_samples, self.num_restarts
            )));
        }
        if !(self.sigma_floor > 0.0) || !self.lambda.is_finite() {
            return Err(Error::invalid("sigma_floor must be positive and lambda finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairProposal {
    pub xi: Vec<f64>,
    pub xj: Vec<f64>,
    pub value: f64,
    /// Number of constraint-surrogate evaluations spent on this proposal.
    pub constraint_queries: usize,
}

/// Marginal feasibility of a constraint observation at each point. The
/// spread includes the model's jitter, so points where the latent variance
/// rounds to zero are not treated as certain.
pub fn feasibility_factors(cons: &GpModel, points: &[Vec<f64>], lambda: f64) -> Vec<f64> {
    let (mu, var) = cons.marginals(points);
    let noise = cons.noise_variance();
    mu.iter()
        .zip(&var)
        .map(|(m, v)| feasibility_factor(*m, (v + noise).sqrt(), lambda))
        .collect()
}

/// Feasibility factor with its gradient with respect to the point.
fn factor_with_grad(cons: &GpModel, x: &[f64], lambda: f64) -> (f64, Vec<f64>) {
    let (mu, var, dmu, dvar) = cons.marginal_with_grad(x);
    let sd = (var + cons.noise_variance()).sqrt();
    if sd <= 0.0 {
        return (feasibility_factor(mu, 0.0, lambda), vec![0.0; x.len()]);
    }
    let z = (mu - lambda) / sd;
    let pz = norm_pdf(z);
    let grad = dmu
        .iter()
        .zip(&dvar)
        .map(|(dm, dv)| pz * (dm - z * dv / (2.0 * sd)) / sd)
        .collect();
    (norm_cdf(z), grad)
}

/// EUBO and its gradient over the concatenated pair.
fn eubo_with_grad(m: &PairMoments, sigma_floor: f64, grad: &mut [f64]) -> f64 {
    let d = m.d_mean[0].len();
    let delta = m.mean[0] - m.mean[1];
    let v = m.var[0] + m.var[1] - 2.0 * m.cov;
    let raw = v.max(0.0).sqrt();
    let (sigma, floored) = if raw > sigma_floor {
        (raw, false)
    } else {
        (sigma_floor, true)
    };
    let u = delta / sigma;
    let (cdf, pdf) = (norm_cdf(u), norm_pdf(u));
    for k in 0..d {
        let (dsig_i, dsig_j) = if floored {
            (0.0, 0.0)
        } else {
            (
                (m.d_var[0][k] - 2.0 * m.d_cov[0][k]) / (2.0 * sigma),
                (m.d_var[1][k] - 2.0 * m.d_cov[1][k]) / (2.0 * sigma),
            )
        };
        grad[k] = cdf * m.d_mean[0][k] + pdf * dsig_i;
        grad[d + k] = -cdf * m.d_mean[1][k] + pdf * dsig_j + m.d_mean[1][k];
    }
    delta * cdf + sigma * pdf + m.mean[1]
}

/// Acquisition value and gradient at the concatenated pair `x`.
pub(crate) fn acquisition_with_grad(
    obj: &PrefModel,
    cons: Option<&GpModel>,
    cfg: &AcqConfig,
    x: &[f64],
    grad: &mut [f64],
) -> f64 {
    let d = x.len() / 2;
    let (xi, xj) = x.split_at(d);
    let m = obj.pair_moments(xi, xj);
    let e = eubo_with_grad(&m, cfg.sigma_floor, grad);
    let Some(cons) = cons else {
        return e;
    };
    let (pi, gi) = factor_with_grad(cons, xi, cfg.lambda);
    let (pj, gj) = factor_with_grad(cons, xj, cfg.lambda);
    for k in 0..d {
        grad[k] = pi * pj * grad[k] + e * pj * gi[k];
        grad[d + k] = pi * pj * grad[d + k] + e * pi * gj[k];
    }
    pi * pj * e
}

fn batch_values(
    obj: &PrefModel,
    cons: Option<&GpModel>,
    cfg: &AcqConfig,
    pairs: &[(Vec<f64>, Vec<f64>)],
) -> Vec<f64> {
    let moments = obj.pair_moments_batch(pairs);
    let feas: Vec<f64> = match cons {
        None => vec![1.0; pairs.len()],
        Some(c) => {
            let mut pts: Vec<Vec<f64>> = pairs.iter().map(|p| p.0.clone()).collect();
            pts.extend(pairs.iter().map(|p| p.1.clone()));
            let (mu, var) = c.marginals(&pts);
            let noise = c.noise_variance();
            let m = pairs.len();
            (0..m)
                .map(|p| {
                    let (si, sj) = ((var[p] + noise).sqrt(), (var[m + p] + noise).sqrt());
                    feasibility_prob(mu[p], si, mu[m + p], sj, cfg.lambda)
                })
                .collect()
        }
    };
    moments
        .iter()
        .zip(feas)
        .map(|(mm, f)| {
            match PairStats::from_moments([mm[0], mm[1]], [mm[2], mm[3]], mm[4], cfg.sigma_floor) {
                Ok(ps) => f * eubo(&ps),
                Err(_) => f64::NAN,
            }
        })
        .collect()
}

/// Value of the acquisition at one pair.
pub fn acquisition_value(
    obj: &PrefModel,
    cons: Option<&GpModel>,
    cfg: &AcqConfig,
    policy: AcqPolicy,
    xi: &[f64],
    xj: &[f64],
) -> f64 {
    let cons = match policy {
        AcqPolicy::Eubo => None,
        AcqPolicy::Euboc => cons,
    };
    batch_values(obj, cons, cfg, &[(xi.to_vec(), xj.to_vec())])[0]
}

/// Maximize the acquisition jointly over `(x_i, x_j) in [0,1]^{2N}`: score
/// `raw_samples` uniform pairs, start projected L-BFGS from the best
/// `num_restarts` of them, and keep the best end point (ties go to the
/// lowest restart index).
pub fn maximize_pair(
    obj: &PrefModel,
    cons: Option<&GpModel>,
    cfg: &AcqConfig,
    policy: AcqPolicy,
) -> Result<PairProposal> {
    cfg.validate()?;
    let d = obj.kernel().dims();
    let cons = match policy {
        AcqPolicy::Eubo => None,
        AcqPolicy::Euboc => cons,
    };
    if let Some(c) = cons {
        if c.dims() != d {
            return Err(Error::invalid("objective and constraint models differ in dimension"));
        }
    }
    let mut queries = 0usize;

    let mut rng = stream_rng(cfg.seed, streams::PROPOSAL, 0);
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..cfg.raw_samples)
        .map(|_| {
            let xi = (0..d).map(|_| rng.random::<f64>()).collect();
            let xj = (0..d).map(|_| rng.random::<f64>()).collect();
            (xi, xj)
        })
        .collect();
    let values = batch_values(obj, cons, cfg, &pairs);
    if cons.is_some() {
        queries += 2 * pairs.len();
    }
    let mut order: Vec<usize> = (0..values.len()).filter(|&i| values[i].is_finite()).collect();
    if order.is_empty() {
        return Err(Error::numerical("every raw acquisition sample is non-finite"));
    }
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));

    let lower = vec![0.0; 2 * d];
    let upper = vec![1.0; 2 * d];
    let opts = LbfgsbOptions {
        max_iter: 100,
        pgtol: 1e-7,
        ftol: 1e-12,
        ..Default::default()
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for &idx in order.iter().take(cfg.num_restarts) {
        let mut x0 = pairs[idx].0.clone();
        x0.extend_from_slice(&pairs[idx].1);
        let mut evals = 0usize;
        let result = minimize_box(
            |x, g| {
                evals += 1;
                let v = acquisition_with_grad(obj, cons, cfg, x, g);
                g.iter_mut().for_each(|gk| *gk = -*gk);
                -v
            },
            &x0,
            &lower,
            &upper,
            &opts,
        );
        if cons.is_some() {
            queries += 2 * evals;
        }
        let (value, x) = if result.value.is_finite() && -result.value >= values[idx] {
            (-result.value, result.x)
        } else {
            (values[idx], x0)
        };
        if best.as_ref().is_none_or(|(v, _)| value > *v) {
            best = Some((value, x));
        }
    }
    let (value, x) = best.expect("at least one restart");
    Ok(PairProposal {
        xi: x[..d].to_vec(),
        xj: x[d..].to_vec(),
        value,
        constraint_queries: queries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::{fit_gp, GpFitConfig};
    use crate::pref::{fit_pref_model, PrefFitConfig, PreferenceDataset};

    fn toy_models() -> (PrefModel, GpModel) {
        let mut ds = PreferenceDataset::new(2, 1.0).unwrap();
        ds.add_preference(&[0.7, 0.2], &[0.1, 0.9]).unwrap();
        ds.add_preference(&[0.6, 0.6], &[0.7, 0.2]).unwrap();
        ds.add_preference(&[0.6, 0.6], &[0.2, 0.3]).unwrap();
        let obj = fit_pref_model(&ds, &PrefFitConfig::default(), 1).unwrap();
        let xs: Vec<Vec<f64>> = (0..25)
            .map(|i| vec![(i % 5) as f64 / 4.0, (i / 5) as f64 / 4.0])
            .collect();
        let ys = xs.iter().map(|x| x[0] - x[1]).collect();
        let cons = fit_gp(xs, ys, 2, &GpFitConfig::default(), 2).unwrap();
        (obj, cons)
    }

    #[test]
    fn closed_form_reference_values() {
        let ps = PairStats { delta: 0.0, sigma_pair: 1.0, mu_second: 0.0 };
        assert!((eubo(&ps) - 0.398_942_280_401_432_7).abs() < 1e-12);
        let ps = PairStats { delta: 1.0, sigma_pair: 1.0, mu_second: 0.0 };
        assert!((eubo(&ps) - 1.083_315_470_889_2).abs() < 1e-9);
        let ps = PairStats { delta: 0.7, sigma_pair: 1e-6, mu_second: 0.1 };
        assert!((eubo(&ps) - 0.8).abs() < 1e-9);
        assert!((feasibility_prob(0.5, 0.2, 0.5, 0.3, 0.5) - 0.25).abs() < 1e-15);
        assert!(feasibility_prob(1.0, 0.1, 2.0, 0.2, 0.0) > 1.0 - 1e-10);
        assert!((feasibility_prob(1.2, 0.2, 1.5, 0.5, 1.0) - 0.707_860_981_737_141).abs() < 1e-9);
        assert_eq!(feasibility_prob(0.3, 0.0, 0.7, 0.0, 0.5), 0.0);
        assert_eq!(feasibility_prob(0.5, 0.0, 0.7, 0.0, 0.5), 1.0);
        let ps = PairStats { delta: 1.0, sigma_pair: 1.0, mu_second: 0.0 };
        assert_eq!(euboc(&ps, 1.0), eubo(&ps));
        assert_eq!(euboc(&ps, 0.0), 0.0);
        assert!((euboc(&ps, 0.25) - 0.27083).abs() < 1e-5);
    }

    #[test]
    fn pair_stats_shapes() {
        let pred = PredictiveDistribution {
            means: vec![0.3, 0.3],
            covariance: nalgebra::DMatrix::from_element(2, 2, 0.4),
            variances: vec![0.4, 0.4],
        };
        let ps = pair_stats(&pred, 1e-6).unwrap();
        assert_eq!(ps.delta, 0.0);
        assert_eq!(ps.sigma_pair, 1e-6);
        let pred = PredictiveDistribution {
            means: vec![0.0, 0.0],
            covariance: nalgebra::DMatrix::from_diagonal_element(2, 2, 0.5),
            variances: vec![0.5, 0.5],
        };
        assert!((pair_stats(&pred, 1e-6).unwrap().sigma_pair - 1.0).abs() < 1e-15);
        let bad = PredictiveDistribution {
            means: vec![0.0, 0.0],
            covariance: nalgebra::DMatrix::from_row_slice(2, 2, &[0.1, 1.0, 1.0, 0.1]),
            variances: vec![0.1, 0.1],
        };
        assert!(pair_stats(&bad, 1e-6).is_err());
    }

    #[test]
    fn analytic_gradient_matches_differences() {
        let (obj, cons) = toy_models();
        let cfg = AcqConfig { lambda: 0.1, ..Default::default() };
        let x = [0.31, 0.47, 0.83, 0.12];
        for c in [None, Some(&cons)] {
            let mut g = [0.0; 4];
            let v = acquisition_with_grad(&obj, c, &cfg, &x, &mut g);
            let batch = batch_values(&obj, c, &cfg, &[(x[..2].to_vec(), x[2..].to_vec())])[0];
            assert!((v - batch).abs() < 1e-10);
            for k in 0..4 {
                let h = 1e-6;
                let mut p = x;
                let mut m = x;
                p[k] += h;
                m[k] -= h;
                let mut dummy = [0.0; 4];
                let fd = (acquisition_with_grad(&obj, c, &cfg, &p, &mut dummy)
                    - acquisition_with_grad(&obj, c, &cfg, &m, &mut dummy))
                    / (2.0 * h);
                assert!((fd - g[k]).abs() < 1e-6 * (1.0 + fd.abs()), "{k}: {fd} vs {}", g[k]);
            }
        }
    }

    #[test]
    fn euboc_without_constraint_model_matches_eubo() {
        let (obj, cons) = toy_models();
        let cfg = AcqConfig { seed: 9, lambda: 0.2, ..Default::default() };
        let a = maximize_pair(&obj, None, &cfg, AcqPolicy::Euboc).unwrap();
        let b = maximize_pair(&obj, Some(&cons), &cfg, AcqPolicy::Eubo).unwrap();
        assert_eq!((a.xi.clone(), a.xj.clone(), a.value), (b.xi, b.xj, b.value));
        assert_eq!(b.constraint_queries, 0);
        let far = AcqConfig { lambda: -1e10, ..cfg };
        let c = maximize_pair(&obj, Some(&cons), &far, AcqPolicy::Euboc).unwrap();
        assert_eq!((a.xi, a.xj, a.value), (c.xi, c.xj, c.value));
        assert!(c.constraint_queries > 0);
    }

    #[test]
    fn rejects_bad_config() {
        let (obj, _) = toy_models();
        let cfg = AcqConfig { raw_samples: 2, num_restarts: 3, ..Default::default() };
        assert!(maximize_pair(&obj, None, &cfg, AcqPolicy::Eubo).is_err());
    }
}

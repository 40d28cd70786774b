//! Gaussian-process regression for the directly observed constraint.
//!
//! Targets are standardized before fitting; the kernel and constant mean are
//! stored in standardized units and every prediction is mapped back. The
//! model is noise-free apart from a small diagonal jitter, which is escalated
//! tenfold (up to `1e-2`) whenever the Gram matrix fails to factorize.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{KernelKind, KernelSpec};
use crate::linalg::{chol_log_det, jittered_cholesky, spd_inverse, symmetrize};
use crate::optimize::{minimize_box, LbfgsbOptions};
use crate::rng::stream_rng;

const LN_2PI: f64 = 1.837_877_066_409_345_5;
const UNIT_BOX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

impl GammaPrior {
    pub const fn new(shape: f64, rate: f64) -> Self {
        Self { shape, rate }
    }

    /// Log density up to its normalizing constant.
    pub fn log_density(&self, x: f64) -> f64 {
        (self.shape - 1.0) * x.ln() - self.rate * x
    }

    /// Derivative of [`Self::log_density`] with respect to `ln x`.
    pub fn d_log_density_d_log(&self, x: f64) -> f64 {
        (self.shape - 1.0) - self.rate * x
    }

    pub fn mode(&self) -> f64 {
        if self.shape >= 1.0 {
            (self.shape - 1.0) / self.rate
        } else {
            self.shape / self.rate
        }
    }

    fn sample(&self, rng: &mut impl rand::Rng) -> f64 {
        Gamma::new(self.shape, 1.0 / self.rate)
            .map(|g| g.sample(rng))
            .unwrap_or_else(|_| self.mode())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperPriors {
    pub lengthscale: GammaPrior,
    pub output_scale: GammaPrior,
}

impl Default for HyperPriors {
    fn default() -> Self {
        Self {
            lengthscale: GammaPrior::new(3.0, 6.0),
            output_scale: GammaPrior::new(2.0, 0.15),
        }
    }
}

impl HyperPriors {
    pub(crate) fn log_density(&self, kernel: &KernelSpec) -> f64 {
        kernel
            .lengthscales
            .iter()
            .map(|l| self.lengthscale.log_density(*l))
            .sum::<f64>()
            + self.output_scale.log_density(kernel.output_scale)
    }

    /// Prior-mode kernel, the hyperparameters of an untrained model.
    pub fn mode_kernel(&self, kind: KernelKind, dims: usize) -> KernelSpec {
        KernelSpec {
            kind,
            lengthscales: vec![self.lengthscale.mode(); dims],
            output_scale: self.output_scale.mode(),
        }
    }

    /// Starting points for multi-start fitting in log space: the prior mode
    /// first, then draws from the priors.
    pub(crate) fn log_starts(&self, dims: usize, restarts: usize, seed: u64) -> Vec<Vec<f64>> {
        (0..restarts.max(1))
            .map(|r| {
                if r == 0 {
                    let mut v = vec![self.lengthscale.mode().ln(); dims];
                    v.push(self.output_scale.mode().ln());
                    v
                } else {
                    let mut rng = stream_rng(seed, 0, r as u64);
                    let mut v: Vec<f64> =
                        (0..dims).map(|_| self.lengthscale.sample(&mut rng).ln()).collect();
                    v.push(self.output_scale.sample(&mut rng).ln());
                    v
                }
            })
            .collect()
    }
}

/// Log-space bounds shared by both surrogates.
pub(crate) const LOG_LENGTHSCALE_BOUNDS: (f64, f64) = (-5.298_317_366_548_036, 3.912_023_005_428_146); // [0.005, 50]
pub(crate) const LOG_OUTPUT_SCALE_BOUNDS: (f64, f64) = (-6.907_755_278_982_137, 6.907_755_278_982_137); // [1e-3, 1e3]
const MEAN_BOUNDS: (f64, f64) = (-3.0, 3.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpFitConfig {
    pub kind: KernelKind,
    pub priors: HyperPriors,
    pub jitter: f64,
    pub restarts: usize,
    pub max_iter: usize,
    /// Hyperparameters are selected on an evenly strided subset of at most
    /// this many points; the posterior always conditions on every point.
    pub max_fit_points: usize,
}

impl Default for GpFitConfig {
    fn default() -> Self {
        Self {
            kind: KernelKind::Matern52,
            priors: HyperPriors::default(),
            jitter: 1e-6,
            restarts: 3,
            max_iter: 60,
            max_fit_points: 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveDistribution {
    pub means: Vec<f64>,
    pub covariance: DMatrix<f64>,
    pub variances: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GpModel {
    kernel: KernelSpec,
    mean_constant: f64,
    y_offset: f64,
    y_scale: f64,
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
    jitter: f64,
    alpha: DVector<f64>,
    k_inv: DMatrix<f64>,
    log_marginal_likelihood: f64,
}

pub(crate) fn check_points(points: &[Vec<f64>], dims: usize) -> Result<()> {
    for p in points {
        if p.len() != dims {
            return Err(Error::invalid(format!(
                "expected {dims}-dimensional point, got {}",
                p.len()
            )));
        }
        if p
            .iter()
            .any(|v| !v.is_finite() || *v < -UNIT_BOX_TOL || *v > 1.0 + UNIT_BOX_TOL)
        {
            return Err(Error::invalid(format!("point {p:?} outside the unit box")));
        }
    }
    Ok(())
}

impl GpModel {
    /// A model with no data: the posterior is the prior everywhere.
    pub fn prior(kernel: KernelSpec, mean_constant: f64) -> Self {
        Self {
            kernel,
            mean_constant,
            y_offset: 0.0,
            y_scale: 1.0,
            inputs: Vec::new(),
            targets: Vec::new(),
            jitter: 0.0,
            alpha: DVector::zeros(0),
            k_inv: DMatrix::zeros(0, 0),
            log_marginal_likelihood: 0.0,
        }
    }

    /// Condition on data with fixed hyperparameters (no standardization).
    pub fn with_hyperparameters(
        inputs: Vec<Vec<f64>>,
        targets: Vec<f64>,
        kernel: KernelSpec,
        mean_constant: f64,
        jitter: f64,
    ) -> Result<Self> {
        validate_data(&inputs, &targets, kernel.dims())?;
        Self::condition(inputs, targets, kernel, mean_constant, 0.0, 1.0, jitter)
    }

    fn condition(
        inputs: Vec<Vec<f64>>,
        targets: Vec<f64>,
        kernel: KernelSpec,
        mean_constant: f64,
        y_offset: f64,
        y_scale: f64,
        jitter: f64,
    ) -> Result<Self> {
        if inputs.is_empty() {
            let mut m = Self::prior(kernel, mean_constant);
            m.y_offset = y_offset;
            m.y_scale = y_scale;
            return Ok(m);
        }
        let n = inputs.len();
        let gram = kernel.gram(&inputs);
        let (chol, jitter) = jittered_cholesky(&gram, jitter)?;
        let resid = DVector::from_iterator(
            n,
            targets
                .iter()
                .map(|y| (y - y_offset) / y_scale - mean_constant),
        );
        let alpha = chol.solve(&resid);
        let k_inv = spd_inverse(&chol);
        let lml = -0.5 * resid.dot(&alpha) - 0.5 * chol_log_det(&chol) - 0.5 * n as f64 * LN_2PI;
        Ok(Self {
            kernel,
            mean_constant,
            y_offset,
            y_scale,
            inputs,
            targets,
            jitter,
            alpha,
            k_inv,
            log_marginal_likelihood: lml,
        })
    }

    pub fn dims(&self) -> usize {
        self.kernel.dims()
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// Kernel in standardized target units.
    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    /// Prior variance in target units.
    pub fn output_scale(&self) -> f64 {
        self.kernel.output_scale * self.y_scale * self.y_scale
    }

    /// Prior mean in target units.
    pub fn mean_constant(&self) -> f64 {
        self.y_offset + self.y_scale * self.mean_constant
    }

    /// The jitter expressed as a noise variance in target units.
    pub fn noise_variance(&self) -> f64 {
        self.jitter * self.y_scale * self.y_scale
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Log marginal likelihood of the standardized targets.
    pub fn log_marginal_likelihood(&self) -> f64 {
        self.log_marginal_likelihood
    }

    /// Log-space hyperparameter vector `[ln l_1 .. ln l_D, ln s, mean]`.
    pub fn hyperparameters(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.kernel.lengthscales.iter().map(|l| l.ln()).collect();
        v.push(self.kernel.output_scale.ln());
        v.push(self.mean_constant);
        v
    }

    /// Full joint predictive distribution at `queries`.
    pub fn posterior(&self, queries: &[Vec<f64>]) -> Result<PredictiveDistribution> {
        check_points(queries, self.dims())?;
        let m = queries.len();
        let mut cov = self.kernel.gram(queries);
        let mut means = vec![self.mean_constant; m];
        if !self.is_empty() {
            let kx = self.cross_matrix(queries);
            let mean_part = kx.transpose() * &self.alpha;
            for (mu, d) in means.iter_mut().zip(mean_part.iter()) {
                *mu += d;
            }
            let u = &self.k_inv * &kx;
            cov -= kx.transpose() * u;
            symmetrize(&mut cov);
        }
        let s2 = self.y_scale * self.y_scale;
        cov *= s2;
        let means = means
            .into_iter()
            .map(|mu| self.y_offset + self.y_scale * mu)
            .collect();
        for i in 0..m {
            cov[(i, i)] = cov[(i, i)].max(0.0);
        }
        let variances = (0..m).map(|i| cov[(i, i)]).collect();
        Ok(PredictiveDistribution {
            means,
            covariance: cov,
            variances,
        })
    }

    fn cross_matrix(&self, queries: &[Vec<f64>]) -> DMatrix<f64> {
        let mut kx = DMatrix::zeros(self.len(), queries.len());
        for (j, q) in queries.iter().enumerate() {
            kx.set_column(j, &self.kernel.cross(&self.inputs, q, self.jitter));
        }
        kx
    }

    /// Marginal means and variances (target units) for many points at once.
    pub fn marginals(&self, queries: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
        let s = self.kernel.output_scale;
        let s2 = self.y_scale * self.y_scale;
        if self.is_empty() {
            let mu = self.mean_constant();
            return (vec![mu; queries.len()], vec![s * s2; queries.len()]);
        }
        let kx = self.cross_matrix(queries);
        let u = &self.k_inv * &kx;
        let mut means = Vec::with_capacity(queries.len());
        let mut vars = Vec::with_capacity(queries.len());
        for j in 0..queries.len() {
            let col = kx.column(j);
            let mu = self.mean_constant + col.dot(&self.alpha);
            let var = (s - col.dot(&u.column(j))).max(0.0);
            means.push(self.y_offset + self.y_scale * mu);
            vars.push(var * s2);
        }
        (means, vars)
    }

    /// Marginal mean and variance at one point, with gradients with respect
    /// to the point (target units).
    pub(crate) fn marginal_with_grad(&self, x: &[f64]) -> (f64, f64, Vec<f64>, Vec<f64>) {
        let dims = self.dims();
        let s2 = self.y_scale * self.y_scale;
        if self.is_empty() {
            return (
                self.mean_constant(),
                self.kernel.output_scale * s2,
                vec![0.0; dims],
                vec![0.0; dims],
            );
        }
        let (k, jac) = self.kernel.cross_with_grad(&self.inputs, x, self.jitter);
        let u = &self.k_inv * &k;
        let mu = self.mean_constant + k.dot(&self.alpha);
        let var = self.kernel.output_scale - k.dot(&u);
        let dmu = jac.tr_mul(&self.alpha);
        let dvar = jac.tr_mul(&u) * -2.0;
        let (var, dvar) = if var > 0.0 {
            (var * s2, dvar.iter().map(|v| v * s2).collect())
        } else {
            (0.0, vec![0.0; dims])
        };
        (
            self.y_offset + self.y_scale * mu,
            var,
            dmu.iter().map(|v| v * self.y_scale).collect(),
            dvar,
        )
    }
}

fn validate_data(inputs: &[Vec<f64>], targets: &[f64], dims: usize) -> Result<()> {
    if inputs.len() != targets.len() {
        return Err(Error::invalid(format!(
            "{} inputs but {} targets",
            inputs.len(),
            targets.len()
        )));
    }
    if let Some(t) = targets.iter().find(|t| !t.is_finite()) {
        return Err(Error::invalid(format!("non-finite target {t}")));
    }
    check_points(inputs, dims)
}

/// Negative penalized log marginal likelihood and its gradient over
/// `[ln l, ln s, mean]` for standardized targets.
fn neg_penalized_lml(
    theta: &[f64],
    kind: KernelKind,
    priors: &HyperPriors,
    inputs: &[Vec<f64>],
    y: &DVector<f64>,
    jitter: f64,
    grad: &mut [f64],
) -> f64 {
    let dims = theta.len() - 2;
    let n = inputs.len();
    let kernel = KernelSpec {
        kind,
        lengthscales: theta[..dims].iter().map(|v| v.exp()).collect(),
        output_scale: theta[dims].exp(),
    };
    let mean = theta[dims + 1];
    let gram = kernel.gram(inputs);
    let Ok((chol, _)) = jittered_cholesky(&gram, jitter) else {
        grad.iter_mut().for_each(|g| *g = 0.0);
        return f64::INFINITY;
    };
    let resid = y.map(|v| v - mean);
    let alpha = chol.solve(&resid);
    let k_inv = spd_inverse(&chol);
    let lml = -0.5 * resid.dot(&alpha) - 0.5 * chol_log_det(&chol) - 0.5 * n as f64 * LN_2PI;

    // d lml / d theta_j = 1/2 tr((alpha alpha^T - K^-1) dK_j)
    let mut g = vec![0.0; dims + 2];
    let mut dk = vec![0.0; dims + 1];
    for j in 0..n {
        let wjj = alpha[j] * alpha[j] - k_inv[(j, j)];
        g[dims] += 0.5 * wjj * kernel.output_scale;
        for i in (j + 1)..n {
            kernel.k_grad_hyper(&inputs[i], &inputs[j], &mut dk);
            let w = alpha[i] * alpha[j] - k_inv[(i, j)];
            for (gt, d) in g.iter_mut().zip(&dk) {
                *gt += w * d;
            }
        }
    }
    g[dims + 1] = alpha.sum();

    let log_prior = priors.log_density(&kernel);
    for d in 0..dims {
        g[d] += priors.lengthscale.d_log_density_d_log(kernel.lengthscales[d]);
    }
    g[dims] += priors.output_scale.d_log_density_d_log(kernel.output_scale);

    for (out, v) in grad.iter_mut().zip(&g) {
        *out = -v;
    }
    -(lml + log_prior)
}

/// Evenly strided subset of at most `cap` indices out of `n`.
pub(crate) fn strided_subset(n: usize, cap: usize) -> Vec<usize> {
    if n <= cap || cap == 0 {
        return (0..n).collect();
    }
    (0..cap).map(|i| i * n / cap).collect()
}

/// Fit a GP to `(inputs, targets)` by maximizing the log marginal likelihood
/// plus the log gamma-prior densities, with multi-start bound-constrained
/// ascent in log-parameter space. Deterministic given `seed`.
pub fn fit_gp(
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
    dims: usize,
    cfg: &GpFitConfig,
    seed: u64,
) -> Result<GpModel> {
    validate_data(&inputs, &targets, dims)?;
    let n = inputs.len();
    if n == 0 {
        return Ok(GpModel::prior(cfg.priors.mode_kernel(cfg.kind, dims), 0.0));
    }

    let y_offset = targets.iter().sum::<f64>() / n as f64;
    let var = targets.iter().map(|t| (t - y_offset).powi(2)).sum::<f64>() / n as f64;
    let y_scale = if n > 1 && var.sqrt() > 1e-12 {
        var.sqrt()
    } else {
        1.0
    };

    let subset = strided_subset(n, cfg.max_fit_points);
    let fit_inputs: Vec<Vec<f64>> = subset.iter().map(|&i| inputs[i].clone()).collect();
    let fit_y = DVector::from_iterator(
        subset.len(),
        subset.iter().map(|&i| (targets[i] - y_offset) / y_scale),
    );

    let mut lower = vec![LOG_LENGTHSCALE_BOUNDS.0; dims];
    lower.extend([LOG_OUTPUT_SCALE_BOUNDS.0, MEAN_BOUNDS.0]);
    let mut upper = vec![LOG_LENGTHSCALE_BOUNDS.1; dims];
    upper.extend([LOG_OUTPUT_SCALE_BOUNDS.1, MEAN_BOUNDS.1]);

    let opts = LbfgsbOptions {
        max_iter: cfg.max_iter,
        pgtol: 1e-5,
        ftol: 1e-9,
        ..Default::default()
    };

    let mut best: Option<(f64, Vec<f64>)> = None;
    for mut start in cfg.priors.log_starts(dims, cfg.restarts, seed) {
        start.push(0.0);
        let result = minimize_box(
            |theta, grad| {
                neg_penalized_lml(theta, cfg.kind, &cfg.priors, &fit_inputs, &fit_y, cfg.jitter, grad)
            },
            &start,
            &lower,
            &upper,
            &opts,
        );
        if result.value.is_finite() && best.as_ref().is_none_or(|(v, _)| result.value < *v) {
            best = Some((result.value, result.x));
        }
    }
    let (_, theta) = best.ok_or_else(|| {
        Error::numerical("every hyperparameter restart failed to factorize the Gram matrix")
    })?;

    let kernel = KernelSpec {
        kind: cfg.kind,
        lengthscales: theta[..dims].iter().map(|v| v.exp()).collect(),
        output_scale: theta[dims].exp(),
    };
    GpModel::condition(inputs, targets, kernel, theta[dims + 1], y_offset, y_scale, cfg.jitter)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn se(l: f64, s: f64) -> KernelSpec {
        KernelSpec::new(KernelKind::SquaredExponential, vec![l], s).unwrap()
    }

    #[test]
    fn empty_model_returns_prior() {
        let m = GpModel::prior(se(0.3, 2.5), 0.7);
        let p = m.posterior(&[vec![0.1], vec![0.9]]).unwrap();
        assert_eq!(p.means, vec![0.7, 0.7]);
        assert_eq!(p.variances, vec![2.5, 2.5]);
        let (mu, var) = m.marginals(&[vec![0.4]]);
        assert_eq!((mu[0], var[0]), (0.7, 2.5));
    }

    #[test]
    fn two_point_closed_form() {
        // Hand-solved 2x2 system: mean(x) = m + [k1 k2] K^-1 (y - m)
        let k = se(0.4, 1.3);
        let xs = vec![vec![0.2], vec![0.7]];
        let ys = vec![1.0, -0.5];
        let mean = 0.1;
        let model = GpModel::with_hyperparameters(xs.clone(), ys.clone(), k.clone(), mean, 0.0).unwrap();
        let q = [0.45];
        let a = 1.3;
        let b = k.eval(&xs[0], &xs[1]).unwrap();
        let det = a * a - b * b;
        let r = [ys[0] - mean, ys[1] - mean];
        let w = [(a * r[0] - b * r[1]) / det, (-b * r[0] + a * r[1]) / det];
        let k1 = k.eval(&xs[0], &q).unwrap();
        let k2 = k.eval(&xs[1], &q).unwrap();
        let expected = mean + k1 * w[0] + k2 * w[1];
        let got = model.posterior(&[q.to_vec()]).unwrap().means[0];
        assert!((got - expected).abs() < 1e-8, "{got} vs {expected}");
    }

    #[test]
    fn interpolates_training_points() {
        let xs = vec![vec![0.1, 0.2], vec![0.5, 0.5], vec![0.9, 0.3]];
        let ys = vec![0.3, -1.2, 2.0];
        let model = fit_gp(xs.clone(), ys.clone(), 2, &GpFitConfig::default(), 3).unwrap();
        let p = model.posterior(&xs).unwrap();
        for i in 0..3 {
            assert!((p.means[i] - ys[i]).abs() < 1e-3);
            assert!(p.variances[i] < 1e-3);
        }
    }

    #[test]
    fn duplicate_inputs_fit() {
        let xs = vec![vec![0.5], vec![0.5]];
        let model = fit_gp(xs, vec![1.0, 1.0], 1, &GpFitConfig::default(), 0).unwrap();
        assert!(model.kernel().output_scale > 0.0);
        assert!(model.kernel().lengthscales[0] > 0.0);
    }

    #[test]
    fn rejects_bad_data() {
        let cfg = GpFitConfig::default();
        assert!(fit_gp(vec![vec![0.5]], vec![f64::NAN], 1, &cfg, 0).is_err());
        assert!(fit_gp(vec![vec![1.5]], vec![0.0], 1, &cfg, 0).is_err());
        assert!(fit_gp(vec![vec![0.5]], vec![0.0, 1.0], 1, &cfg, 0).is_err());
        let m = GpModel::prior(se(0.3, 1.0), 0.0);
        assert!(m.posterior(&[vec![0.1, 0.2]]).is_err());
    }

    #[test]
    fn lml_gradient_matches_differences() {
        let xs: Vec<Vec<f64>> = (0..7)
            .map(|i| vec![i as f64 / 7.0, ((i * 3) % 7) as f64 / 7.0])
            .collect();
        let y = DVector::from_iterator(7, xs.iter().map(|x| (3.0 * x[0]).sin() + x[1]));
        let theta = [-0.9, -0.4, 0.3, 0.2];
        let priors = HyperPriors::default();
        for kind in [KernelKind::SquaredExponential, KernelKind::Matern52] {
            let mut g = [0.0; 4];
            neg_penalized_lml(&theta, kind, &priors, &xs, &y, 1e-6, &mut g);
            for j in 0..4 {
                let h = 1e-6;
                let mut tp = theta;
                let mut tm = theta;
                tp[j] += h;
                tm[j] -= h;
                let mut dummy = [0.0; 4];
                let fd = (neg_penalized_lml(&tp, kind, &priors, &xs, &y, 1e-6, &mut dummy)
                    - neg_penalized_lml(&tm, kind, &priors, &xs, &y, 1e-6, &mut dummy))
                    / (2.0 * h);
                assert!((fd - g[j]).abs() < 1e-4 * (1.0 + fd.abs()), "{kind:?} {j}: {fd} vs {}", g[j]);
            }
        }
    }

    #[test]
    fn marginal_gradients_match_differences() {
        let xs = vec![vec![0.1, 0.2], vec![0.5, 0.5], vec![0.9, 0.3], vec![0.3, 0.8]];
        let ys = vec![0.3, -1.2, 2.0, 0.4];
        let model = fit_gp(xs, ys, 2, &GpFitConfig::default(), 1).unwrap();
        let x = [0.42, 0.61];
        let (mu, var, dmu, dvar) = model.marginal_with_grad(&x);
        let (m2, v2) = model.marginals(&[x.to_vec()]);
        assert!((mu - m2[0]).abs() < 1e-10 && (var - v2[0]).abs() < 1e-10);
        for d in 0..2 {
            let h = 1e-6;
            let mut xp = x;
            let mut xm = x;
            xp[d] += h;
            xm[d] -= h;
            let (mp, vp) = model.marginals(&[xp.to_vec()]);
            let (mm, vm) = model.marginals(&[xm.to_vec()]);
            assert!(((mp[0] - mm[0]) / (2.0 * h) - dmu[d]).abs() < 1e-5);
            assert!(((vp[0] - vm[0]) / (2.0 * h) - dvar[d]).abs() < 1e-5);
        }
    }

    #[test]
    fn strided_subset_is_even() {
        assert_eq!(strided_subset(5, 10), vec![0, 1, 2, 3, 4]);
        assert_eq!(strided_subset(10, 5), vec![0, 2, 4, 6, 8]);
    }
}

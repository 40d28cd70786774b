//! Preference-based Gaussian-process surrogate for the objective.
//!
//! Pairwise outcomes enter through the Thurstone–Mosteller likelihood
//! `P(x_w > x_l | f) = Phi((f_w - f_l) / (sqrt(2) sigma))`. The posterior over
//! latent utilities at the compared points is approximated by a Gaussian at
//! its mode (Laplace), found by damped Newton ascent. Kernel hyperparameters
//! maximize the Laplace-approximate evidence plus gamma log-priors.
//!
//! The Newton iteration is carried in `a = K^-1 f` so that no explicit
//! inverse of the Gram matrix is needed:
//! `a_new = (I + W K)^-1 (W f + grad)`, with `W` the negative Hessian of the
//! log-likelihood.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{
    check_points, HyperPriors, PredictiveDistribution, LOG_LENGTHSCALE_BOUNDS,
    LOG_OUTPUT_SCALE_BOUNDS,
};
use crate::kernel::{coincide, KernelKind, KernelSpec};
use crate::linalg::{jittered_cholesky, symmetrize};
use crate::optimize::{minimize_box, LbfgsbOptions};
use crate::stats::{inv_mills, log_norm_cdf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comparison {
    pub winner: usize,
    pub loser: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceDataset {
    dims: usize,
    points: Vec<Vec<f64>>,
    comparisons: Vec<Comparison>,
    sigma_cmp: f64,
}

impl PreferenceDataset {
    pub fn new(dims: usize, sigma_cmp: f64) -> Result<Self> {
        if !(sigma_cmp.is_finite() && sigma_cmp > 0.0) {
            return Err(Error::invalid(format!("sigma_cmp must be positive, got {sigma_cmp}")));
        }
        Ok(Self {
            dims,
            points: Vec::new(),
            comparisons: Vec::new(),
            sigma_cmp,
        })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn comparisons(&self) -> &[Comparison] {
        &self.comparisons
    }

    pub fn sigma_cmp(&self) -> f64 {
        self.sigma_cmp
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn index_of(&self, x: &[f64]) -> Option<usize> {
        self.points.iter().position(|p| coincide(p, x))
    }

    /// Index of `x`, appending it unless an existing point coincides.
    pub fn add_point(&mut self, x: &[f64]) -> Result<usize> {
        check_points(std::slice::from_ref(&x.to_vec()), self.dims)?;
        if let Some(i) = self.index_of(x) {
            return Ok(i);
        }
        self.points.push(x.to_vec());
        Ok(self.points.len() - 1)
    }

    pub fn add_comparison(&mut self, winner: usize, loser: usize) -> Result<()> {
        if winner == loser {
            return Err(Error::invalid("a comparison needs two distinct points"));
        }
        if winner >= self.points.len() || loser >= self.points.len() {
            return Err(Error::invalid(format!(
                "comparison ({winner}, {loser}) references a missing point"
            )));
        }
        self.comparisons.push(Comparison { winner, loser });
        Ok(())
    }

    /// Record `winner > loser`. Returns `None` (nothing recorded beyond the
    /// point itself) when the two points coincide.
    pub fn add_preference(&mut self, winner: &[f64], loser: &[f64]) -> Result<Option<Comparison>> {
        let w = self.add_point(winner)?;
        let l = self.add_point(loser)?;
        if w == l {
            return Ok(None);
        }
        self.add_comparison(w, l)?;
        Ok(Some(Comparison { winner: w, loser: l }))
    }

    fn scale(&self) -> f64 {
        1.0 / (std::f64::consts::SQRT_2 * self.sigma_cmp)
    }

    fn z(&self, c: &Comparison, f: &[f64]) -> f64 {
        (f[c.winner] - f[c.loser]) * self.scale()
    }
}

/// `sum_c ln Phi((f_w - f_l) / (sqrt(2) sigma))`, each term clamped below at
/// `ln 1e-300`.
pub fn tm_log_likelihood(ds: &PreferenceDataset, latents: &[f64]) -> Result<f64> {
    if latents.len() != ds.len() {
        return Err(Error::invalid(format!(
            "{} latents for {} points",
            latents.len(),
            ds.len()
        )));
    }
    Ok(ds
        .comparisons
        .iter()
        .map(|c| log_norm_cdf(ds.z(c, latents)))
        .sum())
}

/// Log-likelihood, its gradient and the negative Hessian `W`.
fn likelihood_terms(ds: &PreferenceDataset, f: &DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>) {
    let n = ds.len();
    let c = ds.scale();
    let mut ll = 0.0;
    let mut g = DVector::zeros(n);
    let mut w = DMatrix::zeros(n, n);
    for cmp in &ds.comparisons {
        let z = ds.z(cmp, f.as_slice());
        ll += log_norm_cdf(z);
        let r = inv_mills(z);
        g[cmp.winner] += c * r;
        g[cmp.loser] -= c * r;
        let h = r * (z + r) * c * c;
        w[(cmp.winner, cmp.winner)] += h;
        w[(cmp.loser, cmp.loser)] += h;
        w[(cmp.winner, cmp.loser)] -= h;
        w[(cmp.loser, cmp.winner)] -= h;
    }
    (ll, g, w)
}

#[derive(Debug, Clone)]
struct Mode {
    a: DVector<f64>,
    f: DVector<f64>,
    log_lik: f64,
    psi: f64,
    grad: DVector<f64>,
    w: DMatrix<f64>,
    converged: bool,
    grad_norm: f64,
    iterations: usize,
}

fn mode_at(ds: &PreferenceDataset, k: &DMatrix<f64>, a: DVector<f64>) -> Mode {
    let f = k * &a;
    let (log_lik, grad, w) = likelihood_terms(ds, &f);
    let psi = log_lik - 0.5 * a.dot(&f);
    let grad_norm = (&grad - &a).norm();
    Mode {
        a,
        f,
        log_lik,
        psi,
        grad,
        w,
        converged: false,
        grad_norm,
        iterations: 0,
    }
}

/// Damped Newton ascent on `psi(f) = ln p(D|f) - f^T K^-1 f / 2`.
fn find_mode(
    ds: &PreferenceDataset,
    k: &DMatrix<f64>,
    a0: DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<Mode> {
    let n = ds.len();
    let mut cur = mode_at(ds, k, a0);
    if ds.comparisons.is_empty() {
        cur.converged = cur.grad_norm <= tol;
        return Ok(cur);
    }
    let eye = DMatrix::<f64>::identity(n, n);
    for it in 0..max_iter {
        if cur.grad_norm <= tol {
            cur.converged = true;
            cur.iterations = it;
            return Ok(cur);
        }
        let b = &cur.w * &cur.f + &cur.grad;
        let system = &eye + &cur.w * k;
        let a_newton = system
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::numerical("singular Newton system in Laplace fit"))?;
        let step = a_newton - &cur.a;
        let mut t = 1.0;
        let mut next = None;
        for _ in 0..=20 {
            let cand = mode_at(ds, k, &cur.a + &step * t);
            if cand.psi.is_finite() && cand.psi >= cur.psi {
                next = Some(cand);
                break;
            }
            t *= 0.5;
        }
        match next {
            Some(m) => cur = m,
            None => {
                cur.iterations = it + 1;
                return Ok(cur);
            }
        }
    }
    cur.iterations = max_iter;
    cur.converged = cur.grad_norm <= tol;
    Ok(cur)
}

/// Laplace approximation of the latent posterior at the compared points.
#[derive(Debug, Clone)]
pub struct LatentPosterior {
    pub map_latents: Vec<f64>,
    /// `W`, the negative log-likelihood Hessian at the mode.
    pub neg_loglik_hessian: DMatrix<f64>,
    /// Gram matrix including the jitter on its diagonal.
    pub kernel_matrix: DMatrix<f64>,
    pub jitter: f64,
    pub converged: bool,
    pub grad_norm: f64,
    pub iterations: usize,
    pub log_likelihood: f64,
    /// Unnormalized log posterior `psi` at the mode.
    pub log_posterior: f64,
    weights: DVector<f64>,
    pred_matrix: DMatrix<f64>,
    log_det_b: f64,
}

impl LatentPosterior {
    /// `K^-1 f` at the mode.
    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    /// `(K + W^-1)^-1`, the matrix that shrinks predictive covariances.
    pub fn prediction_matrix(&self) -> &DMatrix<f64> {
        &self.pred_matrix
    }

    /// Laplace approximation of `ln p(D | hyperparameters)`.
    pub fn log_evidence(&self) -> f64 {
        self.log_posterior - 0.5 * self.log_det_b
    }
}

fn jittered_gram(kernel: &KernelSpec, points: &[Vec<f64>], jitter: f64) -> Result<(DMatrix<f64>, f64)> {
    let mut k = kernel.gram(points);
    if points.is_empty() {
        return Ok((k, jitter));
    }
    let (_, used) = jittered_cholesky(&k, jitter)?;
    for i in 0..k.nrows() {
        k[(i, i)] += used;
    }
    Ok((k, used))
}

fn posterior_from_mode(mode: Mode, k: DMatrix<f64>, jitter: f64) -> Result<LatentPosterior> {
    let n = k.nrows();
    let system = DMatrix::<f64>::identity(n, n) + &mode.w * &k;
    let lu = system.lu();
    let log_det_b = lu.u().diagonal().iter().map(|d| d.abs().ln()).sum::<f64>();
    let mut pred_matrix = lu
        .solve(&mode.w)
        .ok_or_else(|| Error::numerical("singular I + W K at the Laplace mode"))?;
    symmetrize(&mut pred_matrix);
    Ok(LatentPosterior {
        map_latents: mode.f.iter().copied().collect(),
        neg_loglik_hessian: mode.w,
        kernel_matrix: k,
        jitter,
        converged: mode.converged,
        grad_norm: mode.grad_norm,
        iterations: mode.iterations,
        log_likelihood: mode.log_lik,
        log_posterior: mode.psi,
        weights: mode.a,
        pred_matrix,
        log_det_b,
    })
}

/// Newton ascent from `f = 0` to the posterior mode, with step halving (up to
/// 20 times) whenever the log posterior would decrease.
pub fn laplace_fit(
    ds: &PreferenceDataset,
    kernel: &KernelSpec,
    jitter: f64,
    tol: f64,
    max_iter: usize,
) -> Result<LatentPosterior> {
    if ds.is_empty() {
        return Err(Error::invalid("laplace_fit needs at least one point"));
    }
    if kernel.dims() != ds.dims() {
        return Err(Error::invalid("kernel and dataset dimensions differ"));
    }
    let (k, jitter) = jittered_gram(kernel, &ds.points, jitter)?;
    let mode = find_mode(ds, &k, DVector::zeros(ds.len()), tol, max_iter)?;
    posterior_from_mode(mode, k, jitter)
}

/// Predictive distribution of the latent utility at `queries`.
pub fn pref_posterior(
    lp: &LatentPosterior,
    kernel: &KernelSpec,
    points: &[Vec<f64>],
    queries: &[Vec<f64>],
) -> Result<PredictiveDistribution> {
    check_points(queries, kernel.dims())?;
    if points.len() != lp.map_latents.len() {
        return Err(Error::invalid("posterior and point list sizes differ"));
    }
    let m = queries.len();
    let mut kx = DMatrix::zeros(points.len(), m);
    for (j, q) in queries.iter().enumerate() {
        kx.set_column(j, &kernel.cross(points, q, lp.jitter));
    }
    let means = (kx.transpose() * &lp.weights).iter().copied().collect();
    let mut cov = kernel.gram(queries) - kx.transpose() * (&lp.pred_matrix * &kx);
    symmetrize(&mut cov);
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

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrefFitConfig {
    pub kind: KernelKind,
    pub priors: HyperPriors,
    pub jitter: f64,
    pub restarts: usize,
    pub max_iter: usize,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
}

impl Default for PrefFitConfig {
    fn default() -> Self {
        Self {
            kind: KernelKind::SquaredExponential,
            priors: HyperPriors::default(),
            jitter: 1e-6,
            restarts: 3,
            max_iter: 50,
            newton_tol: 1e-6,
            newton_max_iter: 100,
        }
    }
}

fn kernel_from_log(kind: KernelKind, theta: &[f64]) -> KernelSpec {
    let dims = theta.len() - 1;
    KernelSpec {
        kind,
        lengthscales: theta[..dims].iter().map(|v| v.exp()).collect(),
        output_scale: theta[dims].exp(),
    }
}

/// Laplace log evidence plus log priors, and its gradient over
/// `[ln l_1 .. ln l_D, ln s]`, including the implicit dependence of the mode
/// on the hyperparameters. Returns the mode's `a` for warm-starting.
fn penalized_evidence(
    ds: &PreferenceDataset,
    theta: &[f64],
    cfg: &PrefFitConfig,
    a0: DVector<f64>,
    grad: &mut [f64],
) -> Result<(f64, DVector<f64>)> {
    let kernel = kernel_from_log(cfg.kind, theta);
    let n = ds.len();
    let (k, jitter) = jittered_gram(&kernel, &ds.points, cfg.jitter)?;
    let mode = find_mode(ds, &k, a0, cfg.newton_tol, cfg.newton_max_iter)?;
    let a = mode.a.clone();
    let g_lik = mode.grad.clone();
    let post = posterior_from_mode(mode, k, jitter)?;
    let value = post.log_evidence() + cfg.priors.log_density(&kernel);

    // Posterior covariance at the data, Sigma = K - K A K.
    let ka = &post.kernel_matrix * &post.pred_matrix;
    let sigma = &post.kernel_matrix - &ka * &post.kernel_matrix;

    // d ln|B| / d f_i through W(f).
    let c = ds.scale();
    let mut v = DVector::zeros(n);
    for cmp in &ds.comparisons {
        let z = ds.z(cmp, &post.map_latents);
        let r = inv_mills(z);
        let t = -r * ((z + r) * (z + 2.0 * r) - 1.0);
        let quad = sigma[(cmp.winner, cmp.winner)] + sigma[(cmp.loser, cmp.loser)]
            - 2.0 * sigma[(cmp.winner, cmp.loser)];
        let coef = t * c * c * c * quad;
        v[cmp.winner] += coef;
        v[cmp.loser] -= coef;
    }

    let nh = theta.len();
    let mut dks = vec![DMatrix::<f64>::zeros(n, n); nh];
    let mut buf = vec![0.0; nh];
    for j in 0..n {
        for i in j..n {
            kernel.k_grad_hyper(&ds.points[i], &ds.points[j], &mut buf);
            for (h, d) in buf.iter().enumerate() {
                dks[h][(i, j)] = *d;
                dks[h][(j, i)] = *d;
            }
        }
    }
    for (h, dk) in dks.iter().enumerate() {
        let explicit = 0.5 * a.dot(&(dk * &a)) - 0.5 * dk.component_mul(&post.pred_matrix).sum();
        let u = dk * &g_lik;
        let df = &u - &post.kernel_matrix * (&post.pred_matrix * &u);
        let implicit = -0.5 * v.dot(&df);
        grad[h] = explicit + implicit;
    }
    let dims = nh - 1;
    for d in 0..dims {
        grad[d] += cfg.priors.lengthscale.d_log_density_d_log(kernel.lengthscales[d]);
    }
    grad[dims] += cfg.priors.output_scale.d_log_density_d_log(kernel.output_scale);
    Ok((value, a))
}

/// Fitted objective surrogate: hyperparameters plus the Laplace posterior.
#[derive(Debug, Clone)]
pub struct PrefModel {
    kernel: KernelSpec,
    points: Vec<Vec<f64>>,
    posterior: Option<LatentPosterior>,
}

/// Predictive moments of a candidate pair, with gradients with respect to
/// each member of the pair.
#[derive(Debug, Clone)]
pub(crate) struct PairMoments {
    pub mean: [f64; 2],
    pub var: [f64; 2],
    pub cov: f64,
    pub d_mean: [Vec<f64>; 2],
    pub d_var: [Vec<f64>; 2],
    pub d_cov: [Vec<f64>; 2],
}

impl PrefModel {
    /// Condition on `ds` with fixed hyperparameters.
    pub fn with_kernel(ds: &PreferenceDataset, kernel: KernelSpec, cfg: &PrefFitConfig) -> Result<Self> {
        if kernel.dims() != ds.dims() {
            return Err(Error::invalid("kernel and dataset dimensions differ"));
        }
        let posterior = if ds.is_empty() {
            None
        } else {
            Some(laplace_fit(ds, &kernel, cfg.jitter, cfg.newton_tol, cfg.newton_max_iter)?)
        };
        Ok(Self {
            kernel,
            points: ds.points.clone(),
            posterior,
        })
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn latent_posterior(&self) -> Option<&LatentPosterior> {
        self.posterior.as_ref()
    }

    /// Log-space hyperparameters `[ln l_1 .. ln l_D, ln s]`.
    pub fn hyperparameters(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.kernel.lengthscales.iter().map(|l| l.ln()).collect();
        v.push(self.kernel.output_scale.ln());
        v
    }

    pub fn predict(&self, queries: &[Vec<f64>]) -> Result<PredictiveDistribution> {
        match &self.posterior {
            Some(lp) => pref_posterior(lp, &self.kernel, &self.points, queries),
            None => {
                check_points(queries, self.kernel.dims())?;
                let cov = self.kernel.gram(queries);
                Ok(PredictiveDistribution {
                    means: vec![0.0; queries.len()],
                    variances: vec![self.kernel.output_scale; queries.len()],
                    covariance: cov,
                })
            }
        }
    }

    /// Posterior mean of the latent utility at `x`.
    pub fn mean(&self, x: &[f64]) -> f64 {
        match &self.posterior {
            Some(lp) => self.kernel.cross(&self.points, x, lp.jitter).dot(&lp.weights),
            None => 0.0,
        }
    }

    pub(crate) fn pair_moments(&self, xi: &[f64], xj: &[f64]) -> PairMoments {
        let dims = self.kernel.dims();
        let s = self.kernel.output_scale;
        let mut dk_ij = vec![0.0; dims];
        let k_ij = self.kernel.k_grad_a(xi, xj, &mut dk_ij);
        let dk_ji: Vec<f64> = dk_ij.iter().map(|v| -v).collect();
        let Some(lp) = &self.posterior else {
            return PairMoments {
                mean: [0.0, 0.0],
                var: [s, s],
                cov: k_ij,
                d_mean: [vec![0.0; dims], vec![0.0; dims]],
                d_var: [vec![0.0; dims], vec![0.0; dims]],
                d_cov: [dk_ij, dk_ji],
            };
        };
        let (ki, ji) = self.kernel.cross_with_grad(&self.points, xi, lp.jitter);
        let (kj, jj) = self.kernel.cross_with_grad(&self.points, xj, lp.jitter);
        let ui = &lp.pred_matrix * &ki;
        let uj = &lp.pred_matrix * &kj;
        let to_vec = |v: DVector<f64>| v.iter().copied().collect::<Vec<f64>>();
        let scale = |v: DVector<f64>, c: f64| v.iter().map(|x| x * c).collect::<Vec<f64>>();
        let d_cov_i: Vec<f64> = dk_ij
            .iter()
            .zip(ji.tr_mul(&uj).iter())
            .map(|(a, b)| a - b)
            .collect();
        let d_cov_j: Vec<f64> = dk_ji
            .iter()
            .zip(jj.tr_mul(&ui).iter())
            .map(|(a, b)| a - b)
            .collect();
        PairMoments {
            mean: [ki.dot(&lp.weights), kj.dot(&lp.weights)],
            var: [s - ki.dot(&ui), s - kj.dot(&uj)],
            cov: k_ij - ki.dot(&uj),
            d_mean: [to_vec(ji.tr_mul(&lp.weights)), to_vec(jj.tr_mul(&lp.weights))],
            d_var: [scale(ji.tr_mul(&ui), -2.0), scale(jj.tr_mul(&uj), -2.0)],
            d_cov: [d_cov_i, d_cov_j],
        }
    }

    /// `(mean_i, mean_j, var_i, var_j, cov_ij)` for many pairs at once.
    pub(crate) fn pair_moments_batch(&self, pairs: &[(Vec<f64>, Vec<f64>)]) -> Vec<[f64; 5]> {
        let s = self.kernel.output_scale;
        let Some(lp) = &self.posterior else {
            return pairs
                .iter()
                .map(|(a, b)| [0.0, 0.0, s, s, self.kernel.k(a, b)])
                .collect();
        };
        let m = pairs.len();
        let n = self.points.len();
        let mut kx = DMatrix::zeros(n, 2 * m);
        for (p, (a, b)) in pairs.iter().enumerate() {
            kx.set_column(p, &self.kernel.cross(&self.points, a, lp.jitter));
            kx.set_column(m + p, &self.kernel.cross(&self.points, b, lp.jitter));
        }
        let u = &lp.pred_matrix * &kx;
        let means = kx.tr_mul(&lp.weights);
        pairs
            .iter()
            .enumerate()
            .map(|(p, (a, b))| {
                let (ci, cj) = (kx.column(p), kx.column(m + p));
                [
                    means[p],
                    means[m + p],
                    s - ci.dot(&u.column(p)),
                    s - cj.dot(&u.column(m + p)),
                    self.kernel.k(a, b) - ci.dot(&u.column(m + p)),
                ]
            })
            .collect()
    }
}

/// Fit the objective surrogate: hyperparameters by multi-start maximization
/// of the penalized Laplace evidence, then the Laplace posterior from `f = 0`.
/// With no comparisons the prior-mode hyperparameters are used.
pub fn fit_pref_model(ds: &PreferenceDataset, cfg: &PrefFitConfig, seed: u64) -> Result<PrefModel> {
    let dims = ds.dims();
    if ds.comparisons.is_empty() {
        return PrefModel::with_kernel(ds, cfg.priors.mode_kernel(cfg.kind, dims), cfg);
    }
    let mut lower = vec![LOG_LENGTHSCALE_BOUNDS.0; dims];
    lower.push(LOG_OUTPUT_SCALE_BOUNDS.0);
    let mut upper = vec![LOG_LENGTHSCALE_BOUNDS.1; dims];
    upper.push(LOG_OUTPUT_SCALE_BOUNDS.1);
    let opts = LbfgsbOptions {
        max_iter: cfg.max_iter,
        pgtol: 1e-5,
        ftol: 1e-9,
        ..Default::default()
    };

    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in cfg.priors.log_starts(dims, cfg.restarts, seed) {
        let mut warm = DVector::zeros(ds.len());
        let result = minimize_box(
            |theta, grad| {
                match penalized_evidence(ds, theta, cfg, warm.clone(), grad) {
                    Ok((value, a)) => {
                        warm = a;
                        grad.iter_mut().for_each(|g| *g = -*g);
                        -value
                    }
                    Err(_) => f64::INFINITY,
                }
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
    let (_, theta) =
        best.ok_or_else(|| Error::numerical("every evidence restart failed in the preference fit"))?;
    PrefModel::with_kernel(ds, kernel_from_log(cfg.kind, &theta), cfg)
}

//! Stationary covariance functions with per-dimension lengthscales.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT_5: f64 = 2.236_067_977_499_79;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    SquaredExponential,
    Matern52,
}

/// A scaled stationary kernel `s * g(r)` with ARD distance
/// `r^2 = sum_d ((a_d - b_d) / l_d)^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub lengthscales: Vec<f64>,
    pub output_scale: f64,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, lengthscales: Vec<f64>, output_scale: f64) -> Result<Self> {
        if lengthscales.is_empty() {
            return Err(Error::invalid("kernel needs at least one lengthscale"));
        }
        if lengthscales.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::invalid(format!(
                "lengthscales must be positive and finite, got {lengthscales:?}"
            )));
        }
        if !(output_scale.is_finite() && output_scale > 0.0) {
            return Err(Error::invalid(format!(
                "output scale must be positive and finite, got {output_scale}"
            )));
        }
        Ok(Self {
            kind,
            lengthscales,
            output_scale,
        })
    }

    pub fn dims(&self) -> usize {
        self.lengthscales.len()
    }

    /// Checked kernel evaluation `k(a, b)`.
    pub fn eval(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.len() != self.dims() || b.len() != self.dims() {
            return Err(Error::invalid(format!(
                "kernel expects {}-dimensional points, got {} and {}",
                self.dims(),
                a.len(),
                b.len()
            )));
        }
        Ok(self.k(a, b))
    }

    pub(crate) fn scaled_sq_dist(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .zip(&self.lengthscales)
            .map(|((x, y), l)| {
                let q = (x - y) / l;
                q * q
            })
            .sum()
    }

    /// Kernel value and its derivative with respect to `r^2`.
    fn profile(&self, r2: f64) -> (f64, f64) {
        let s = self.output_scale;
        match self.kind {
            KernelKind::SquaredExponential => {
                let k = s * (-0.5 * r2).exp();
                (k, -0.5 * k)
            }
            KernelKind::Matern52 => {
                let r = r2.sqrt();
                let e = (-SQRT_5 * r).exp();
                let k = s * (1.0 + SQRT_5 * r + 5.0 * r2 / 3.0) * e;
                (k, -(5.0 / 6.0) * s * (1.0 + SQRT_5 * r) * e)
            }
        }
    }

    pub(crate) fn k(&self, a: &[f64], b: &[f64]) -> f64 {
        self.profile(self.scaled_sq_dist(a, b)).0
    }

    /// `k(a, b)`, writing `dk/da` into `grad`.
    pub(crate) fn k_grad_a(&self, a: &[f64], b: &[f64], grad: &mut [f64]) -> f64 {
        let r2 = self.scaled_sq_dist(a, b);
        let (k, dk_dr2) = self.profile(r2);
        for (d, g) in grad.iter_mut().enumerate() {
            let l = self.lengthscales[d];
            *g = dk_dr2 * 2.0 * (a[d] - b[d]) / (l * l);
        }
        k
    }

    /// `k(a, b)`, writing derivatives with respect to `ln l_1 .. ln l_D, ln s`
    /// into `out` (length `D + 1`).
    pub(crate) fn k_grad_hyper(&self, a: &[f64], b: &[f64], out: &mut [f64]) -> f64 {
        let r2 = self.scaled_sq_dist(a, b);
        let (k, dk_dr2) = self.profile(r2);
        let dims = self.dims();
        for d in 0..dims {
            let q = (a[d] - b[d]) / self.lengthscales[d];
            out[d] = -2.0 * dk_dr2 * q * q;
        }
        out[dims] = k;
        k
    }

    pub(crate) fn gram(&self, points: &[Vec<f64>]) -> DMatrix<f64> {
        let n = points.len();
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            m[(j, j)] = self.output_scale;
            for i in (j + 1)..n {
                let v = self.k(&points[i], &points[j]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    /// Cross-covariance between training points and one query. Entries whose
    /// training point coincides with the query pick up `nugget`, so the noise
    /// term on the training diagonal is reproduced exactly at data.
    pub(crate) fn cross(&self, points: &[Vec<f64>], query: &[f64], nugget: f64) -> DVector<f64> {
        DVector::from_iterator(
            points.len(),
            points.iter().map(|p| {
                let v = self.k(p, query);
                if coincide(p, query) {
                    v + nugget
                } else {
                    v
                }
            }),
        )
    }

    /// Cross-covariance plus its Jacobian with respect to the query
    /// (`n x D`, row `i` is `dk(x_i, q)/dq`).
    pub(crate) fn cross_with_grad(
        &self,
        points: &[Vec<f64>],
        query: &[f64],
        nugget: f64,
    ) -> (DVector<f64>, DMatrix<f64>) {
        let n = points.len();
        let dims = self.dims();
        let mut k = DVector::zeros(n);
        let mut jac = DMatrix::zeros(n, dims);
        let mut g = vec![0.0; dims];
        for (i, p) in points.iter().enumerate() {
            let v = self.k_grad_a(query, p, &mut g);
            k[i] = if coincide(p, query) { v + nugget } else { v };
            for d in 0..dims {
                jac[(i, d)] = g[d];
            }
        }
        (k, jac)
    }
}

/// Points closer than this (max-norm) are treated as the same input.
pub const COINCIDENCE_TOL: f64 = 1e-9;

pub(crate) fn coincide(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= COINCIDENCE_TOL)
}

/// `kernel_eval` as a free function.
pub fn kernel_eval(spec: &KernelSpec, a: &[f64], b: &[f64]) -> Result<f64> {
    spec.eval(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn se(l: f64, s: f64) -> KernelSpec {
        KernelSpec::new(KernelKind::SquaredExponential, vec![l], s).unwrap()
    }

    #[test]
    fn diagonal_equals_output_scale() {
        for kind in [KernelKind::SquaredExponential, KernelKind::Matern52] {
            let k = KernelSpec::new(kind, vec![0.3, 0.7], 2.0).unwrap();
            assert_eq!(k.eval(&[0.2, 0.9], &[0.2, 0.9]).unwrap(), 2.0);
        }
    }

    #[test]
    fn squared_exponential_unit_distance() {
        let v = se(1.0, 1.0).eval(&[0.0], &[1.0]).unwrap();
        assert!((v - (-0.5f64).exp()).abs() < 1e-15);
        assert!((v - 0.60653).abs() < 1e-5);
    }

    #[test]
    fn matern_decays() {
        let k = KernelSpec::new(KernelKind::Matern52, vec![0.01], 1.0).unwrap();
        assert!(k.eval(&[0.0], &[1.0]).unwrap() < 1e-10);
    }

    #[test]
    fn matern_closed_form() {
        // r = 1: (1 + sqrt5 + 5/3) exp(-sqrt5)
        let k = KernelSpec::new(KernelKind::Matern52, vec![0.5], 1.5).unwrap();
        let expected = 1.5 * (1.0 + SQRT_5 + 5.0 / 3.0) * (-SQRT_5).exp();
        assert!((k.eval(&[0.2], &[0.7]).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(KernelSpec::new(KernelKind::Matern52, vec![0.0], 1.0).is_err());
        assert!(KernelSpec::new(KernelKind::Matern52, vec![1.0], -1.0).is_err());
        assert!(se(1.0, 1.0).eval(&[0.0, 1.0], &[0.0]).is_err());
    }

    #[test]
    fn analytic_gradients_match_differences() {
        for kind in [KernelKind::SquaredExponential, KernelKind::Matern52] {
            let spec = KernelSpec::new(kind, vec![0.3, 0.8, 0.5], 1.7).unwrap();
            let a = [0.1, 0.5, 0.9];
            let b = [0.4, 0.2, 0.8];
            let mut g = [0.0; 3];
            spec.k_grad_a(&a, &b, &mut g);
            for d in 0..3 {
                let h = 1e-6;
                let mut ap = a;
                let mut am = a;
                ap[d] += h;
                am[d] -= h;
                let fd = (spec.k(&ap, &b) - spec.k(&am, &b)) / (2.0 * h);
                assert!((fd - g[d]).abs() < 1e-7, "{kind:?} d={d}: {fd} vs {}", g[d]);
            }
            let mut hg = [0.0; 4];
            spec.k_grad_hyper(&a, &b, &mut hg);
            for d in 0..4 {
                let h = 1e-6;
                let shift = |delta: f64| {
                    let mut s = spec.clone();
                    if d < 3 {
                        s.lengthscales[d] *= delta.exp();
                    } else {
                        s.output_scale *= delta.exp();
                    }
                    s.k(&a, &b)
                };
                let fd = (shift(h) - shift(-h)) / (2.0 * h);
                assert!((fd - hg[d]).abs() < 1e-7, "{kind:?} hyper {d}: {fd} vs {}", hg[d]);
            }
        }
    }
}

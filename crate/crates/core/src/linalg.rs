use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};

pub(crate) const MAX_JITTER: f64 = 1e-2;

/// Cholesky factor of `m + jitter * I`, escalating the jitter tenfold on
/// failure until it exceeds [`MAX_JITTER`]. Returns the jitter that worked.
pub(crate) fn jittered_cholesky(
    m: &DMatrix<f64>,
    jitter: f64,
) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let mut jitter = jitter.max(0.0);
    loop {
        let mut a = m.clone();
        for i in 0..a.nrows() {
            a[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(a) {
            let diag_ok = (0..m.nrows()).all(|i| {
                let d = chol.l_dirty()[(i, i)];
                d.is_finite() && d > 0.0
            });
            if diag_ok {
                return Ok((chol, jitter));
            }
        }
        let next = if jitter == 0.0 { 1e-10 } else { jitter * 10.0 };
        if next > MAX_JITTER * (1.0 + 1e-9) {
            return Err(Error::numerical(format!(
                "matrix of size {} not positive definite with jitter up to {MAX_JITTER}",
                m.nrows()
            )));
        }
        jitter = next;
    }
}

pub(crate) fn chol_log_det(chol: &Cholesky<f64, Dyn>) -> f64 {
    let l = chol.l_dirty();
    2.0 * (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>()
}

/// `A^-1` from the Cholesky factor of `A`: invert `L` column by column, then
/// form `L^-T L^-1`. The result is exactly symmetric.
pub(crate) fn spd_inverse(chol: &Cholesky<f64, Dyn>) -> DMatrix<f64> {
    let l = chol.l_dirty();
    let n = l.nrows();
    let ls = l.as_slice();
    let mut linv = DMatrix::<f64>::zeros(n, n);
    for (j, x) in linv.as_mut_slice().chunks_exact_mut(n.max(1)).enumerate() {
        x[j] = 1.0;
        for k in j..n {
            let xk = x[k] / ls[k * n + k];
            x[k] = xk;
            if xk != 0.0 {
                let lcol = &ls[k * n + k + 1..(k + 1) * n];
                for (xi, li) in x[k + 1..].iter_mut().zip(lcol) {
                    *xi -= li * xk;
                }
            }
        }
    }
    let mut inv = linv.transpose() * &linv;
    symmetrize(&mut inv);
    inv
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

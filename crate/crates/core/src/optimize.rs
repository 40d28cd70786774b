//! Bound-constrained limited-memory quasi-Newton minimization.
//!
//! A projected L-BFGS: the two-loop recursion runs over the free variables
//! (those not pinned at a bound by the gradient), and a backtracking Armijo
//! search moves along the projection of the quasi-Newton step onto the box.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
pub struct LbfgsbOptions {
    pub max_iter: usize,
    pub memory: usize,
    /// Stop when the projected gradient's max-norm falls below this.
    pub pgtol: f64,
    /// Stop when the relative decrease of the objective falls below this.
    pub ftol: f64,
}

impl Default for LbfgsbOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            memory: 10,
            pgtol: 1e-6,
            ftol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, lo), hi) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(*lo, *hi);
    }
}

/// Variables sitting on a bound with the gradient pushing outward.
fn pinned(x: &[f64], g: &[f64], lower: &[f64], upper: &[f64]) -> Vec<bool> {
    (0..x.len())
        .map(|i| (x[i] <= lower[i] && g[i] > 0.0) || (x[i] >= upper[i] && g[i] < 0.0))
        .collect()
}

fn dot_masked(a: &[f64], b: &[f64], free: &[bool]) -> f64 {
    a.iter()
        .zip(b)
        .zip(free)
        .filter(|(_, f)| **f)
        .map(|((x, y), _)| x * y)
        .sum()
}

/// Minimize `fg` over the box `[lower, upper]`. `fg(x, grad)` returns the
/// objective and writes its gradient.
pub fn minimize_box<F>(
    mut fg: F,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &LbfgsbOptions,
) -> Minimum
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    project(&mut x, lower, upper);
    let mut g = vec![0.0; n];
    let mut f = fg(&x, &mut g);
    let mut evaluations = 1;
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Minimum {
            x,
            value: f,
            iterations: 0,
            evaluations,
            converged: false,
        };
    }

    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        let pin = pinned(&x, &g, lower, upper);
        let free: Vec<bool> = pin.iter().map(|p| !p).collect();
        let pg_norm = g
            .iter()
            .zip(&pin)
            .map(|(gi, p)| if *p { 0.0 } else { gi.abs() })
            .fold(0.0, f64::max);
        if pg_norm <= opts.pgtol {
            converged = true;
            break;
        }
        iterations += 1;

        // Two-loop recursion restricted to the free variables.
        let mut q: Vec<f64> = g.iter().zip(&free).map(|(v, f)| if *f { *v } else { 0.0 }).collect();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot_masked(s, &q, &free);
            for i in 0..n {
                if free[i] {
                    q[i] -= a * y[i];
                }
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = history.back() {
            let yy = dot_masked(y, y, &free);
            let sy = dot_masked(s, y, &free);
            if yy > 0.0 && sy > 0.0 {
                let gamma = sy / yy;
                q.iter_mut().for_each(|v| *v *= gamma);
            }
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot_masked(y, &q, &free);
            for i in 0..n {
                if free[i] {
                    q[i] += s[i] * (a - b);
                }
            }
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let slope: f64 = dir.iter().zip(&g).map(|(d, gi)| d * gi).sum();
        if !(slope < 0.0) || dir.iter().any(|v| !v.is_finite()) {
            history.clear();
            dir = g.iter().zip(&free).map(|(v, f)| if *f { -v } else { 0.0 }).collect();
        }

        let mut step = if history.is_empty() {
            let dmax = dir.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if dmax > 0.0 {
                (1.0 / dmax).min(1.0)
            } else {
                1.0
            }
        } else {
            1.0
        };

        let mut accepted = None;
        for _ in 0..40 {
            for i in 0..n {
                x_new[i] = x[i] + step * dir[i];
            }
            project(&mut x_new, lower, upper);
            let decrease: f64 = x_new.iter().zip(&x).zip(&g).map(|((a, b), gi)| (a - b) * gi).sum();
            let f_trial = fg(&x_new, &mut g_new);
            evaluations += 1;
            if f_trial.is_finite()
                && g_new.iter().all(|v| v.is_finite())
                && f_trial <= f + 1e-4 * decrease.min(0.0)
                && f_trial <= f
            {
                accepted = Some(f_trial);
                break;
            }
            step *= 0.5;
        }

        let Some(f_next) = accepted else {
            converged = true;
            break;
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let yy: f64 = y.iter().map(|v| v * v).sum();
        if sy > 1e-12 * yy.max(f64::MIN_POSITIVE) && sy > 0.0 {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }

        let rel = (f - f_next) / f.abs().max(f_next.abs()).max(1.0);
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        f = f_next;
        if rel <= opts.ftol {
            converged = true;
            break;
        }
    }

    Minimum {
        x,
        value: f,
        iterations,
        evaluations,
        converged,
    }
}

//! Standard normal helpers.

use libm::erfc;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Lower clamp applied to probabilities before taking logs.
pub const MIN_PROB: f64 = 1e-300;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

pub fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

pub fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// `ln Phi(z)`, accurate in both tails and clamped below at `ln(MIN_PROB)`.
pub fn log_norm_cdf(z: f64) -> f64 {
    let value = if z > 0.0 {
        (-0.5 * erfc(z * FRAC_1_SQRT_2)).ln_1p()
    } else if z > -10.0 {
        norm_cdf(z).ln()
    } else {
        // ln phi(z) - ln R(-z) with the Mills ratio from its continued fraction.
        -0.5 * z * z - LN_SQRT_2PI + mills_ratio(-z).ln()
    };
    value.max(MIN_PROB.ln())
}

/// Inverse Mills ratio `phi(z) / Phi(z)`, finite for all finite `z`.
pub fn inv_mills(z: f64) -> f64 {
    if z > -10.0 {
        norm_pdf(z) / norm_cdf(z)
    } else {
        1.0 / mills_ratio(-z)
    }
}

/// `(1 - Phi(x)) / phi(x)` for `x >= 10` via Laplace's continued fraction.
fn mills_ratio(x: f64) -> f64 {
    let mut tail = x;
    for k in (1..=60).rev() {
        tail = x + k as f64 / tail;
    }
    1.0 / tail
}

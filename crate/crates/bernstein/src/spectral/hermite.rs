//! Scaled Hermite eigenfunctions h_{m,λ}(x) = λ^{1/4} h_m(√λ x).
//!
//! h_m is the L²(ℝ)-normalized Hermite function. Evaluation runs the
//! normalized three-term recurrence, which is forward-stable because h_m is
//! the dominant solution; the Rodrigues form would overflow past m ≈ 150.

use super::MultiIndex;
use crate::error::{Error, Result};

const PI_NEG_QUARTER: f64 = 0.7511255444649425;

/// h_m at unit frequency. Returns 0 once the Gaussian factor underflows;
/// the true value is then far below the double range, and propagating the
/// underflow keeps every later arithmetic step finite.
fn hermite_unit(m: usize, u: f64) -> f64 {
    let psi0 = PI_NEG_QUARTER * (-0.5 * u * u).exp();
    if psi0 == 0.0 {
        return 0.0;
    }
    if m == 0 {
        return psi0;
    }
    let mut prev = psi0;
    let mut cur = std::f64::consts::SQRT_2 * u * psi0;
    for k in 1..m {
        let kf = k as f64;
        let next = u * (2.0 / (kf + 1.0)).sqrt() * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// One-dimensional scaled Hermite function h_{m,λ}(x).
pub fn hermite_function(m: usize, lambda: f64, x: f64) -> f64 {
    debug_assert!(lambda > 0.0);
    lambda.powf(0.25) * hermite_unit(m, lambda.sqrt() * x)
}

/// h_0, .., h_{count−1} at a single point, sharing one recurrence pass.
pub fn hermite_sequence(count: usize, lambda: f64, x: f64) -> Vec<f64> {
    debug_assert!(lambda > 0.0);
    let scale = lambda.powf(0.25);
    let u = lambda.sqrt() * x;
    let mut out = Vec::with_capacity(count);
    let psi0 = PI_NEG_QUARTER * (-0.5 * u * u).exp();
    if psi0 == 0.0 {
        out.resize(count, 0.0);
        return out;
    }
    let mut prev = psi0;
    if count >= 1 {
        out.push(scale * prev);
    }
    if count == 1 {
        return out;
    }
    let mut cur = std::f64::consts::SQRT_2 * u * psi0;
    out.push(scale * cur);
    for k in 1..count - 1 {
        let kf = k as f64;
        let next = u * (2.0 / (kf + 1.0)).sqrt() * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        out.push(scale * cur);
    }
    out
}

/// Tensor eigenfunction Π_j h_{m_j,λ}(x_j).
pub fn hermite_product(m: &MultiIndex, lambda: f64, x: &[f64]) -> Result<f64> {
    if m.len() != x.len() {
        return Err(Error::DimensionMismatch { expected: m.len(), got: x.len() });
    }
    let mut value = 1.0;
    for (&mj, &xj) in m.components().iter().zip(x) {
        value *= hermite_function(mj, lambda, xj);
        if value == 0.0 {
            return Ok(0.0);
        }
    }
    Ok(value)
}

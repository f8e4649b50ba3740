//! Scalar helpers shared by the kernel and law modules.
//!
//! Everything here exists to keep hyperbolic expressions finite and accurate
//! over the whole parameter range: `sinh`/`cosh` overflow near 710, naive
//! ratios lose all digits for small arguments, and the λ → 0 limits must come
//! out exact so oscillator formulas degrade to their Brownian counterparts.
//! Series branches switch on at |a| < 1e-4 where the truncation error is
//! below 1e-17 relative, far under double rounding.

/// ln(2π), used by every Gaussian normalization in the crate.
pub const LN_2PI: f64 = 1.8378770664093453;

/// sinh(a)/a extended continuously by 1 at a = 0.
///
/// Even function; the series branch keeps full precision where direct
/// division would amplify the rounding of sinh.
pub fn sinhc(a: f64) -> f64 {
    let a2 = a * a;
    if a.abs() < 1e-4 {
        1.0 + a2 / 6.0 * (1.0 + a2 / 20.0)
    } else {
        a.sinh() / a
    }
}

/// ln(sinh(a)) for a > 0 without overflow.
///
/// Rewrites sinh(a) = e^a (1 − e^{−2a})/2 so the result stays finite for
/// a in the hundreds where sinh itself would overflow.
pub fn ln_sinh(a: f64) -> f64 {
    debug_assert!(a > 0.0);
    a - std::f64::consts::LN_2 + (-(-2.0 * a).exp()).ln_1p()
}

/// coth(a) for a > 0, with a Laurent-series branch near 0.
pub fn coth(a: f64) -> f64 {
    debug_assert!(a > 0.0);
    if a < 1e-4 {
        let a2 = a * a;
        1.0 / a + a / 3.0 - a * a2 / 45.0
    } else {
        let e = (-2.0 * a).exp();
        (1.0 + e) / (1.0 - e)
    }
}

/// cosh(a) − 1 computed as 2 sinh²(a/2), exact for small a where the direct
/// subtraction cancels.
pub fn cosh_m1(a: f64) -> f64 {
    let s = (0.5 * a).sinh();
    2.0 * s * s
}

/// sinh(a)/sinh(b) for a ≥ 0, b > 0, stable when either argument is large.
///
/// Uses sinh(x) = e^x (1 − e^{−2x})/2; the exp of the difference keeps the
/// ratio finite when both numerator and denominator would overflow.
pub fn sinh_ratio(a: f64, b: f64) -> f64 {
    debug_assert!(a >= 0.0 && b > 0.0);
    if a == 0.0 {
        return 0.0;
    }
    (a - b).exp() * (-2.0 * a).exp_m1() / (-2.0 * b).exp_m1()
}

/// log Σ e^{x_i} with the usual max shift; −∞ for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

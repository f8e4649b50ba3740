//! Truncated eigenfunction expansion of the heat kernel,
//! g(x,t,y) = Σ_{m in box} e^{−tE_m} f_m(x) f_m(y), with a certified bound on
//! the discarded tail.
//!
//! For the analytic Hermite basis the tail is controlled by the
//! Cramér-Charlier sup bound on eigenfunction products combined with the
//! geometric decay of e^{−tE_m}; both are rigorous, so the certificate is
//! too. For a grid eigensystem the certificate extrapolates the computed
//! spectrum: levels beyond the window are assumed to keep at least the top
//! observed spacing and to stay below the largest observed amplitude. That
//! holds for confining wells with convex growth (and exactly for the
//! oscillator) but is an extrapolation, not a theorem, for arbitrary V.
//!
//! Evaluation below `t_min`, where neither argument gives a bound under the
//! tolerance, is refused rather than silently inaccurate.

use super::{check_kernel_args, HeatKernel};
use crate::error::{Error, Result};
use crate::spectral::{hermite_sequence, GridEigenSystem, HarmonicSpec, SpectrumTruncation};

/// Sup bound constant of the Cramér-Charlier inequality.
const CRAMER_K: f64 = 1.086435;

#[derive(Debug, Clone)]
pub enum SpectralBasis {
    Analytic(HarmonicSpec),
    Grid(GridEigenSystem),
}

#[derive(Debug, Clone)]
pub struct SpectralKernel {
    basis: SpectralBasis,
    truncation: SpectrumTruncation,
    tolerance: f64,
    horizon: f64,
    t_min: f64,
}

/// Truncated kernel value together with the certified bound on what the
/// truncation discarded.
#[derive(Debug, Clone, Copy)]
pub struct SpectralValue {
    pub value: f64,
    pub tail_bound: f64,
}

impl SpectralKernel {
    /// Expansion in the scaled Hermite basis, truncated to {m : m_j < levels}.
    ///
    /// `t_min` becomes the smallest time at which the Cramér-Charlier tail
    /// bound drops below `tolerance`; construction fails if even the horizon
    /// cannot be certified.
    pub fn analytic(spec: HarmonicSpec, levels: usize, tolerance: f64) -> Result<Self> {
        if levels == 0 {
            return Err(Error::invalid_parameter("levels", "need at least one level"));
        }
        if !(tolerance > 0.0) {
            return Err(Error::invalid_parameter("tolerance", format!("must be positive, got {tolerance}")));
        }
        let horizon = spec.horizon();
        let tail = |t: f64| analytic_tail(&spec, levels, t);
        let t_min = smallest_certified_time(horizon, tolerance, &tail)?;
        Ok(SpectralKernel {
            truncation: SpectrumTruncation { max_degree: levels, tail_bound: tail(t_min) },
            basis: SpectralBasis::Analytic(spec),
            tolerance,
            horizon,
            t_min,
        })
    }

    /// Expansion in a computed grid eigensystem (one-dimensional).
    ///
    /// Needs at least two levels so the top spacing can seed the tail
    /// extrapolation.
    pub fn from_grid(system: GridEigenSystem, horizon: f64, tolerance: f64) -> Result<Self> {
        if system.len() < 2 {
            return Err(Error::invalid_parameter("system", "tail extrapolation needs at least two levels"));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::invalid_parameter("horizon", format!("must be positive, got {horizon}")));
        }
        if !(tolerance > 0.0) {
            return Err(Error::invalid_parameter("tolerance", format!("must be positive, got {tolerance}")));
        }
        let levels = system.len();
        let tail = {
            let top = system.eigenvalues()[levels - 1];
            let gap = top - system.eigenvalues()[levels - 2];
            if !(gap > 0.0) {
                return Err(Error::Eigensolver { reason: format!("top spacing {gap} is not positive") });
            }
            let amp = (0..levels)
                .flat_map(|m| system.eigenfunction(m).iter().copied())
                .fold(0.0f64, |acc, v| acc.max(v.abs()));
            move |t: f64| {
                let rho = (-t * gap).exp();
                amp * amp * (-t * top).exp() * rho / (1.0 - rho)
            }
        };
        let t_min = smallest_certified_time(horizon, tolerance, &tail)?;
        Ok(SpectralKernel {
            truncation: SpectrumTruncation { max_degree: levels, tail_bound: tail(t_min) },
            basis: SpectralBasis::Grid(system),
            tolerance,
            horizon,
            t_min,
        })
    }

    pub fn basis(&self) -> &SpectralBasis {
        &self.basis
    }

    pub fn truncation(&self) -> &SpectrumTruncation {
        &self.truncation
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Earliest time with a certified tail.
    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    /// Certified bound on the discarded tail at time t.
    pub fn tail_bound(&self, t: f64) -> f64 {
        match &self.basis {
            SpectralBasis::Analytic(spec) => analytic_tail(spec, self.truncation.max_degree, t),
            SpectralBasis::Grid(system) => {
                let levels = system.len();
                let top = system.eigenvalues()[levels - 1];
                let gap = top - system.eigenvalues()[levels - 2];
                let amp = (0..levels)
                    .flat_map(|m| system.eigenfunction(m).iter().copied())
                    .fold(0.0f64, |acc, v| acc.max(v.abs()));
                let rho = (-t * gap).exp();
                amp * amp * (-t * top).exp() * rho / (1.0 - rho)
            }
        }
    }

    fn sum(&self, x: &[f64], t: f64, y: &[f64]) -> f64 {
        match &self.basis {
            SpectralBasis::Analytic(spec) => {
                let lambda = spec.lambda();
                let levels = self.truncation.max_degree;
                let decay = (-t * lambda).exp();
                // the box sum factorizes over coordinates:
                // sum_m prod_j h_{m_j}(x_j) h_{m_j}(y_j) e^{-t lambda m_j}
                let mut product = 1.0;
                for j in 0..spec.dimension() {
                    let hx = hermite_sequence(levels, lambda, x[j]);
                    let hy = hermite_sequence(levels, lambda, y[j]);
                    let mut weight = 1.0;
                    let mut axis = 0.0;
                    for m in 0..levels {
                        axis += weight * hx[m] * hy[m];
                        weight *= decay;
                    }
                    product *= axis;
                }
                product * (-t * lambda * spec.dimension() as f64 / 2.0).exp()
            }
            SpectralBasis::Grid(system) => {
                let mut total = 0.0;
                for m in 0..system.len() {
                    let e = system.eigenvalues()[m];
                    total += (-t * e).exp() * system.eigenfunction_value(m, x[0]) * system.eigenfunction_value(m, y[0]);
                }
                total
            }
        }
    }
}

impl HeatKernel for SpectralKernel {
    fn dimension(&self) -> usize {
        match &self.basis {
            SpectralBasis::Analytic(spec) => spec.dimension(),
            SpectralBasis::Grid(_) => 1,
        }
    }

    fn horizon(&self) -> f64 {
        self.horizon
    }

    fn log_evaluate(&self, x: &[f64], t: f64, y: &[f64]) -> Result<f64> {
        // a truncated sum this close to zero is indistinguishable from zero
        // at the certification tolerance, including slightly negative values
        let v = spectral_kernel_eval(self, x, t, y)?.value;
        Ok(if v > 0.0 { v.ln() } else { f64::NEG_INFINITY })
    }

    fn evaluate(&self, x: &[f64], t: f64, y: &[f64]) -> Result<f64> {
        Ok(spectral_kernel_eval(self, x, t, y)?.value)
    }

    // Trace of the truncation itself, not of the full operator: the kept box
    // factorizes into one geometric sum per coordinate.
    fn partition(&self) -> Result<f64> {
        let horizon = self.horizon;
        match &self.basis {
            SpectralBasis::Analytic(spec) => {
                let q = (-horizon * spec.lambda()).exp();
                let axis = (-0.5 * horizon * spec.lambda()).exp() * (1.0 - q.powi(self.truncation.max_degree as i32))
                    / (1.0 - q);
                Ok(axis.powi(spec.dimension() as i32))
            }
            SpectralBasis::Grid(system) => {
                Ok(system.eigenvalues().iter().map(|&e| (-horizon * e).exp()).sum())
            }
        }
    }
}

/// Truncated expansion value and its certified tail bound.
pub fn spectral_kernel_eval(kernel: &SpectralKernel, x: &[f64], t: f64, y: &[f64]) -> Result<SpectralValue> {
    check_kernel_args(kernel.dimension(), kernel.horizon, x, t, y)?;
    if t < kernel.t_min {
        return Err(Error::TailNotCertified {
            reason: format!(
                "t = {t} is below t_min = {:.6}; the discarded tail cannot be bounded by {:.1e} there",
                kernel.t_min, kernel.tolerance
            ),
        });
    }
    Ok(SpectralValue { value: kernel.sum(x, t, y), tail_bound: kernel.tail_bound(t) })
}

/// Cramér-Charlier tail of the d-dimensional Hermite expansion outside the
/// box {m_j < levels}: sup|f_m(x)f_m(y)| ≤ (λ/π)^{d/2} k^{2d} and the energy
/// sum telescopes to geometric series per coordinate.
fn analytic_tail(spec: &HarmonicSpec, levels: usize, t: f64) -> f64 {
    let d = spec.dimension() as f64;
    let lambda = spec.lambda();
    let sup = (lambda / std::f64::consts::PI).powf(0.5 * d) * CRAMER_K.powf(2.0 * d);
    let q = (-t * lambda).exp();
    let full = (1.0 - q).recip();
    let kept = (1.0 - q.powi(levels as i32)) * full;
    let ground = (-0.5 * t * lambda * d).exp();
    sup * ground * (full.powi(spec.dimension() as i32) - kept.powi(spec.dimension() as i32))
}

fn smallest_certified_time(horizon: f64, tolerance: f64, tail: &impl Fn(f64) -> f64) -> Result<f64> {
    let at_horizon = tail(horizon);
    if !(at_horizon <= tolerance) {
        return Err(Error::TailNotCertified {
            reason: format!("tail bound {at_horizon:.3e} at the horizon exceeds tolerance {tolerance:.1e}"),
        });
    }
    let mut lo = 0.0;
    let mut hi = horizon;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if tail(mid) <= tolerance {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

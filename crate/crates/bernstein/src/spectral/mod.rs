//! Spectrum and eigenbasis of the harmonic oscillator H = −½Δ + λ²|x|²/2.
//!
//! Levels are labeled by multi-indices m ∈ ℕ^d with energies
//! E_m = (Σ_j m_j + d/2)λ. The module provides the energies, the scaled
//! Hermite eigenfunctions, the partition function Z(t) = Σ_m e^{−tE_m} in
//! both its hyperbolic closed form and as a truncated series with an exact
//! geometric tail, Gibbs weights over a truncated index set, and a grid
//! eigensolver for general one-dimensional potentials that serves as an
//! independent oracle for the closed forms.

mod eigensolve;
mod hermite;

pub use eigensolve::{default_half_width, grid_eigensystem, GridEigenSystem};
pub use hermite::{hermite_function, hermite_product, hermite_sequence};

use crate::error::{Error, Result};
use crate::numeric::ln_sinh;

/// Spectral label m ∈ ℕ^d. Ordering is lexicographic, which fixes the
/// enumeration order of truncated sums and mixture components everywhere.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(components: Vec<usize>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid_parameter("components", "multi-index needs length >= 1"));
        }
        Ok(MultiIndex(components))
    }

    pub fn components(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Total degree Σ_j m_j.
    pub fn degree(&self) -> usize {
        self.0.iter().sum()
    }
}

/// Parameters of the oscillator process: dimension, frequency, horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicSpec {
    dimension: usize,
    lambda: f64,
    horizon: f64,
}

impl HarmonicSpec {
    pub fn new(dimension: usize, lambda: f64, horizon: f64) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::invalid_parameter("dimension", "need d >= 1"));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::invalid_parameter("lambda", format!("need a positive frequency, got {lambda}")));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::invalid_parameter("horizon", format!("need a positive horizon, got {horizon}")));
        }
        Ok(HarmonicSpec { dimension, lambda, horizon })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }
}

/// E_m = (Σ_j m_j + d/2)·λ.
pub fn eigenvalue(m: &MultiIndex, spec: &HarmonicSpec) -> Result<f64> {
    if m.len() != spec.dimension {
        return Err(Error::DimensionMismatch { expected: spec.dimension, got: m.len() });
    }
    Ok((m.degree() as f64 + spec.dimension as f64 / 2.0) * spec.lambda)
}

/// Truncation of the spectrum to the box {m : m_j < max_degree ∀j}, together
/// with the geometric bound on the spectral mass left outside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumTruncation {
    pub max_degree: usize,
    pub tail_bound: f64,
}

impl SpectrumTruncation {
    /// Smallest box whose relative tail of Z(t) stays below `tol`.
    ///
    /// The per-dimension level sum is geometric with ratio e^{−tλ}, so the
    /// relative mass outside the box is 1 − (1 − e^{−tλM})^d ≤ d e^{−tλM}.
    pub fn for_partition_tail(spec: &HarmonicSpec, t: f64, tol: f64) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::TimeOutOfRange { t, horizon: f64::INFINITY });
        }
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::invalid_parameter("tol", format!("need 0 < tol < 1, got {tol}")));
        }
        let rate = t * spec.lambda;
        let m = ((spec.dimension as f64 / tol).ln() / rate).ceil().max(1.0) as usize;
        let tail = spec.dimension as f64 * (-(rate * m as f64)).exp();
        Ok(SpectrumTruncation { max_degree: m, tail_bound: tail })
    }
}

/// Every multi-index in the box {m : m_j < max_degree}, lexicographic.
///
/// Enumeration is capped at 10^6 indices; larger boxes indicate a
/// misconfigured truncation rather than a real use case.
pub fn box_indices(dimension: usize, max_degree: usize) -> Result<Vec<MultiIndex>> {
    if dimension == 0 || max_degree == 0 {
        return Err(Error::invalid_parameter("max_degree", "box enumeration needs d >= 1 and M >= 1"));
    }
    let count = (max_degree as f64).powi(dimension as i32);
    if count > 1e6 {
        return Err(Error::invalid_parameter(
            "max_degree",
            format!("box of {max_degree}^{dimension} indices is too large to enumerate"),
        ));
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut current = vec![0usize; dimension];
    loop {
        out.push(MultiIndex(current.clone()));
        // odometer increment, last coordinate fastest
        let mut j = dimension;
        loop {
            if j == 0 {
                return Ok(out);
            }
            j -= 1;
            current[j] += 1;
            if current[j] < max_degree {
                break;
            }
            current[j] = 0;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionMethod {
    Closed,
    Series,
}

/// Z(t) = Σ_m e^{−tE_m}.
///
/// The closed method evaluates (2(cosh(λt) − 1))^{−d/2} = (2 sinh(λt/2))^{−d}
/// in log space so large λt underflows cleanly to 0. The series method sums
/// the truncated box term by term and adds the exact geometric tail, giving a
/// route that never touches the hyperbolic rewrite.
pub fn partition_function(spec: &HarmonicSpec, t: f64, method: PartitionMethod) -> Result<f64> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::TimeOutOfRange { t, horizon: f64::INFINITY });
    }
    let d = spec.dimension as f64;
    match method {
        PartitionMethod::Closed => {
            let half = 0.5 * spec.lambda * t;
            Ok((-d * (std::f64::consts::LN_2 + ln_sinh(half))).exp())
        }
        PartitionMethod::Series => {
            let trunc = SpectrumTruncation::for_partition_tail(spec, t, 1e-12)?;
            let rate = spec.lambda * t;
            // per-dimension partial sum, term by term
            let mut per_dim = 0.0;
            for m in 0..trunc.max_degree {
                per_dim += (-rate * (m as f64 + 0.5)).exp();
            }
            let boxed = if spec.dimension <= 3 && (trunc.max_degree as f64).powi(spec.dimension as i32) <= 1e6 {
                let mut sum = 0.0;
                for m in box_indices(spec.dimension, trunc.max_degree)? {
                    sum += (-t * eigenvalue(&m, spec)?).exp();
                }
                sum
            } else {
                per_dim.powi(spec.dimension as i32)
            };
            // exact geometric remainder of each per-dimension sum
            let tau = (-rate * (trunc.max_degree as f64 + 0.5)).exp() / (-(-rate).exp_m1());
            let correction = (per_dim + tau).powi(spec.dimension as i32) - per_dim.powi(spec.dimension as i32);
            Ok(boxed + correction)
        }
    }
}

/// Gibbs weights p_m = Z(T)^{−1} e^{−TE_m} restricted to a truncation box
/// and renormalized to an exact probability vector.
#[derive(Debug, Clone)]
pub struct GibbsWeights {
    /// Pairs (m, p_m) in lexicographic index order; the weights sum to 1.
    pub entries: Vec<(MultiIndex, f64)>,
    /// Factor the truncated raw weights were multiplied by; 1 + O(tail).
    pub renormalization: f64,
}

pub fn gibbs_weights(spec: &HarmonicSpec, trunc: &SpectrumTruncation) -> Result<GibbsWeights> {
    let z = partition_function(spec, spec.horizon, PartitionMethod::Closed)?;
    let mut entries = Vec::new();
    let mut total = 0.0;
    for m in box_indices(spec.dimension, trunc.max_degree)? {
        let w = (-spec.horizon * eigenvalue(&m, spec)?).exp() / z;
        total += w;
        entries.push((m, w));
    }
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::InvalidWeights { reason: format!("truncated Gibbs mass {total} is not positive") });
    }
    for (_, w) in &mut entries {
        *w /= total;
    }
    Ok(GibbsWeights { entries, renormalization: 1.0 / total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn spec(d: usize, lambda: f64, horizon: f64) -> HarmonicSpec {
        HarmonicSpec::new(d, lambda, horizon).unwrap()
    }

    #[test]
    fn eigenvalue_formula() {
        let m = MultiIndex::new(vec![0]).unwrap();
        assert_eq!(eigenvalue(&m, &spec(1, 1.0, 1.0)).unwrap(), 0.5);
        let m = MultiIndex::new(vec![1, 2]).unwrap();
        assert_eq!(eigenvalue(&m, &spec(2, 0.5, 1.0)).unwrap(), 2.0);
        let m = MultiIndex::new(vec![0, 0, 0]).unwrap();
        assert_eq!(eigenvalue(&m, &spec(3, 2.0, 1.0)).unwrap(), 3.0);
        let m = MultiIndex::new(vec![1]).unwrap();
        assert!(eigenvalue(&m, &spec(2, 1.0, 1.0)).is_err());
    }

    #[test]
    fn closed_partition_function_matches_the_geometric_form() {
        // d=1: Z(t) = e^{-lambda t/2}/(1 - e^{-lambda t})
        for &(lambda, t) in &[(1.0, 1.0), (0.5, 2.0), (2.0, 0.3)] {
            let z = partition_function(&spec(1, lambda, 1.0), t, PartitionMethod::Closed).unwrap();
            let geometric = (-0.5 * lambda * t).exp() / (1.0 - (-lambda * t).exp());
            assert_relative_eq!(z, geometric, max_relative = 1e-14);
        }
        let z1 = partition_function(&spec(1, 1.0, 1.0), 1.0, PartitionMethod::Closed).unwrap();
        let z2 = partition_function(&spec(2, 1.0, 1.0), 1.0, PartitionMethod::Closed).unwrap();
        assert_relative_eq!(z1, 0.9595173756674719, max_relative = 1e-14);
        assert_relative_eq!(z2, z1 * z1, max_relative = 1e-14);
        // ground-state dominance for large t
        let z = partition_function(&spec(1, 1.0, 1.0), 60.0, PartitionMethod::Closed).unwrap();
        assert_relative_eq!(z, (-30.0f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn series_route_agrees_with_the_closed_form() {
        for &d in &[1usize, 2, 3] {
            for &(lambda, t) in &[(1.0, 0.1), (1.0, 1.0), (0.5, 4.0), (2.0, 2.5)] {
                let s = spec(d, lambda, 1.0);
                let closed = partition_function(&s, t, PartitionMethod::Closed).unwrap();
                let series = partition_function(&s, t, PartitionMethod::Series).unwrap();
                assert_relative_eq!(series, closed, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn truncation_tail_bound_covers_the_measured_remainder() {
        let s = spec(2, 1.0, 1.0);
        assert!(SpectrumTruncation::for_partition_tail(&s, 1.0, 1.5).is_err());
        let trunc = SpectrumTruncation::for_partition_tail(&s, 1.0, 1e-10).unwrap();
        let closed = partition_function(&s, 1.0, PartitionMethod::Closed).unwrap();
        let mut boxed = 0.0;
        for m in box_indices(2, trunc.max_degree).unwrap() {
            boxed += (-eigenvalue(&m, &s).unwrap()).exp();
        }
        let actual_tail = (closed - boxed) / closed;
        assert!(actual_tail >= 0.0);
        // the bound d e^{-t lambda M} is tight to first order; 5% absorbs the
        // rounding of the measured difference of two O(1) sums
        assert!(
            actual_tail <= trunc.tail_bound * 1.05,
            "tail {actual_tail:e} above bound {:e}",
            trunc.tail_bound
        );
        assert!(actual_tail >= trunc.tail_bound * 0.2, "bound {:e} is far looser than tail {actual_tail:e}", trunc.tail_bound);
    }

    #[test]
    fn box_enumeration_is_lexicographic() {
        let idx = box_indices(2, 2).unwrap();
        let flat: Vec<&[usize]> = idx.iter().map(|m| m.components()).collect();
        assert_eq!(flat, vec![&[0, 0][..], &[0, 1], &[1, 0], &[1, 1]]);
        assert!(box_indices(3, 200).is_err());
    }

    #[test]
    fn gibbs_weights_renormalize_to_one() {
        let s = spec(1, 1.0, 1.0);
        let trunc = SpectrumTruncation::for_partition_tail(&s, 1.0, 1e-12).unwrap();
        let w = gibbs_weights(&s, &trunc).unwrap();
        let total: f64 = w.entries.iter().map(|(_, p)| p).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-14);
        // d=1 geometric form p_m = (1 - e^{-lambda T}) e^{-lambda T m}
        let p0 = w.entries[0].1;
        assert_relative_eq!(p0, 1.0 - (-1.0f64).exp(), max_relative = 1e-10);
        let ratio = w.entries[1].1 / p0;
        assert_relative_eq!(ratio, (-1.0f64).exp(), max_relative = 1e-12);
        assert!((w.renormalization - 1.0).abs() < 1e-11);
    }
}

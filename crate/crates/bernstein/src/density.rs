//! Trace-class density operators R(t)f = Σ_m p_m ⟨f, u_m(·,t)⟩ v_m(·,t)
//! built from forward/backward solution families, and the identities tying
//! their traces to expectations of the underlying process.
//!
//! Two families are implemented, both one-dimensional: point endpoint data
//! (u_m, v_m are normalized kernel slices through a_m and b_m, and R(t) is
//! generally not self-adjoint) and the Gibbs eigenbasis (u_m = e^{−tE_m}h_m,
//! v_m = e^{tE_m}h_m, a biorthonormal pair for every t). Functions live on
//! caller-supplied quadrature nodes; inner products are weighted dot
//! products, so every identity is checked in the same discretization it is
//! computed in.

use crate::error::{Error, Result};
use crate::kernels::{HeatKernel, MehlerKernel};
use crate::quadrature::QuadratureGrid;
use crate::spectral::{gibbs_weights, hermite_function, HarmonicSpec, SpectrumTruncation};

#[derive(Debug, Clone)]
enum Family {
    /// u_m(x,t) = g(x,t,a_m)/√g(a_m,T,b_m), v_m(x,t) = g(x,T−t,b_m)/√g(…).
    Pinned { starts: Vec<f64>, ends: Vec<f64> },
    /// u_m(x,t) = e^{−tE_m} h_m(x), v_m(x,t) = e^{tE_m} h_m(x).
    Eigenbasis,
}

/// Weighted family of solution pairs defining R(t).
#[derive(Debug, Clone)]
pub struct DensityOperatorSpec {
    spec: HarmonicSpec,
    weights: Vec<f64>,
    renormalization: f64,
    family: Family,
}

/// Bounded multiplication observable b, with its declared sup bound checked
/// at every probed point.
pub struct Observable<F: Fn(f64) -> f64> {
    b: F,
    sup_bound: f64,
}

impl<F: Fn(f64) -> f64> Observable<F> {
    pub fn new(b: F, sup_bound: f64) -> Result<Self> {
        if !(sup_bound.is_finite() && sup_bound > 0.0) {
            return Err(Error::invalid_parameter("sup_bound", format!("must be positive, got {sup_bound}")));
        }
        Ok(Observable { b, sup_bound })
    }

    fn probe(&self, x: f64) -> Result<f64> {
        let value = (self.b)(x);
        if !(value.is_finite() && value.abs() <= self.sup_bound) {
            return Err(Error::invalid_parameter(
                "observable",
                format!("value {value} at {x} escapes the declared bound {}", self.sup_bound),
            ));
        }
        Ok(value)
    }
}

/// Finite-rank image R(t)f (or R*(t)f), kept as the coefficient vector of
/// the output family so it can be evaluated anywhere.
pub struct OperatorImage<'a> {
    op: &'a DensityOperatorSpec,
    t: f64,
    /// c_m = p_m ⟨f, input_m⟩; the image is Σ_m c_m output_m(·,t).
    pub coefficients: Vec<f64>,
    adjoint: bool,
}

impl OperatorImage<'_> {
    pub fn value(&self, x: f64) -> f64 {
        let mut total = 0.0;
        for (m, &c) in self.coefficients.iter().enumerate() {
            if c != 0.0 {
                let (u, v) = self.op.solution_pair(m, x, self.t);
                total += c * if self.adjoint { u } else { v };
            }
        }
        total
    }
}

impl DensityOperatorSpec {
    /// Point endpoint data (a_m, b_m). The defining hypothesis is that the
    /// endpoint separations stay bounded; for a finite family that reduces
    /// to finiteness of the coordinates.
    pub fn pinned(
        spec: HarmonicSpec,
        weights: Vec<f64>,
        starts: Vec<f64>,
        ends: Vec<f64>,
    ) -> Result<Self> {
        if spec.dimension() != 1 {
            return Err(Error::invalid_parameter("spec", "operator families are one-dimensional"));
        }
        if starts.len() != weights.len() || ends.len() != weights.len() {
            return Err(Error::InvalidWeights {
                reason: format!(
                    "{} weights for {} starts and {} ends",
                    weights.len(),
                    starts.len(),
                    ends.len()
                ),
            });
        }
        if starts.iter().chain(&ends).any(|c| !c.is_finite()) {
            return Err(Error::invalid_parameter("endpoints", "coordinates must be finite"));
        }
        let (weights, renormalization) = normalize_weights(weights)?;
        Ok(DensityOperatorSpec { spec, weights, renormalization, family: Family::Pinned { starts, ends } })
    }

    /// Eigenbasis family with explicit weights over levels 0..weights.len().
    pub fn eigenbasis(spec: HarmonicSpec, weights: Vec<f64>) -> Result<Self> {
        if spec.dimension() != 1 {
            return Err(Error::invalid_parameter("spec", "operator families are one-dimensional"));
        }
        let (weights, renormalization) = normalize_weights(weights)?;
        Ok(DensityOperatorSpec { spec, weights, renormalization, family: Family::Eigenbasis })
    }

    /// Eigenbasis family with the canonical thermal weights
    /// p_m = Z^{-1} e^{−T E_m}, truncated to the given number of levels.
    pub fn eigenbasis_gibbs(spec: HarmonicSpec, levels: usize) -> Result<Self> {
        if spec.dimension() != 1 {
            return Err(Error::invalid_parameter("spec", "operator families are one-dimensional"));
        }
        if levels == 0 {
            return Err(Error::invalid_parameter("levels", "need at least one level"));
        }
        // max_degree is the exclusive bound: levels kept are 0..levels
        let trunc = SpectrumTruncation { max_degree: levels, tail_bound: 0.0 };
        let gibbs = gibbs_weights(&spec, &trunc)?;
        let weights = gibbs.entries.iter().map(|(_, w)| *w).collect();
        Ok(DensityOperatorSpec {
            spec,
            weights,
            renormalization: gibbs.renormalization,
            family: Family::Eigenbasis,
        })
    }

    pub fn spec(&self) -> &HarmonicSpec {
        &self.spec
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Factor the supplied (or truncated thermal) weights were scaled by to
    /// sum to one.
    pub fn renormalization(&self) -> f64 {
        self.renormalization
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    fn is_eigenbasis(&self) -> bool {
        matches!(self.family, Family::Eigenbasis)
    }

    /// (u_m(x,t), v_m(x,t)). Assumes `check_time` has been satisfied.
    pub fn solution_pair(&self, m: usize, x: f64, t: f64) -> (f64, f64) {
        match &self.family {
            Family::Pinned { starts, ends } => {
                let kernel = MehlerKernel::new(self.spec);
                let horizon = self.spec.horizon();
                let log_norm = kernel
                    .log_evaluate(&[starts[m]], horizon, &[ends[m]])
                    .expect("endpoints validated at construction");
                let log_u = kernel.log_evaluate(&[x], t, &[starts[m]]).expect("time checked by caller");
                let log_v =
                    kernel.log_evaluate(&[x], horizon - t, &[ends[m]]).expect("time checked by caller");
                ((log_u - 0.5 * log_norm).exp(), (log_v - 0.5 * log_norm).exp())
            }
            Family::Eigenbasis => {
                let lambda = self.spec.lambda();
                let energy = (m as f64 + 0.5) * lambda;
                let h = hermite_function(m, lambda, x);
                ((-t * energy).exp() * h, (t * energy).exp() * h)
            }
        }
    }

    /// Pinned families need 0 < t < T so both kernel slices exist; the
    /// eigenbasis family is defined on the closed window.
    fn check_time(&self, t: f64) -> Result<()> {
        let horizon = self.spec.horizon();
        let ok = match self.family {
            Family::Pinned { .. } => t > 0.0 && t < horizon,
            Family::Eigenbasis => (0.0..=horizon).contains(&t),
        };
        if t.is_finite() && ok {
            Ok(())
        } else {
            Err(Error::TimeOutOfRange { t, horizon })
        }
    }

    /// R(t)f as a finite-rank image: c_m = p_m ⟨f, u_m(·,t)⟩ by quadrature.
    pub fn apply(
        &self,
        t: f64,
        f: impl Fn(f64) -> f64,
        quad: &QuadratureGrid,
    ) -> Result<OperatorImage<'_>> {
        self.check_time(t)?;
        let coefficients = self.pairing_coefficients(t, &f, quad, false);
        Ok(OperatorImage { op: self, t, coefficients, adjoint: false })
    }

    /// R*(t)f, the adjoint image: c_m = p_m ⟨f, v_m(·,t)⟩, output along u_m.
    pub fn adjoint_apply(
        &self,
        t: f64,
        f: impl Fn(f64) -> f64,
        quad: &QuadratureGrid,
    ) -> Result<OperatorImage<'_>> {
        self.check_time(t)?;
        let coefficients = self.pairing_coefficients(t, &f, quad, true);
        Ok(OperatorImage { op: self, t, coefficients, adjoint: true })
    }

    fn pairing_coefficients(
        &self,
        t: f64,
        f: &impl Fn(f64) -> f64,
        quad: &QuadratureGrid,
        against_v: bool,
    ) -> Vec<f64> {
        let mut coefficients = vec![0.0; self.len()];
        for (&x, &w) in quad.nodes.iter().zip(&quad.weights) {
            let fx = f(x);
            if fx == 0.0 {
                continue;
            }
            for (m, c) in coefficients.iter_mut().enumerate() {
                let (u, v) = self.solution_pair(m, x, t);
                *c += w * fx * if against_v { v } else { u };
            }
        }
        for (c, &p) in coefficients.iter_mut().zip(&self.weights) {
            *c *= p;
        }
        coefficients
    }

    /// Tr R(t) = Σ_m p_m ⟨u_m(·,t), v_m(·,t)⟩, each pairing by quadrature.
    /// Equals Σ p_m = 1 up to quadrature error, not by construction.
    pub fn trace(&self, t: f64, quad: &QuadratureGrid) -> Result<f64> {
        self.check_time(t)?;
        let mut total = 0.0;
        for (m, &p) in self.weights.iter().enumerate() {
            let mut pairing = 0.0;
            for (&x, &w) in quad.nodes.iter().zip(&quad.weights) {
                let (u, v) = self.solution_pair(m, x, t);
                pairing += w * u * v;
            }
            total += p * pairing;
        }
        Ok(total)
    }

    /// Tr R²(t) = Σ_m p_m², well defined through biorthonormality and hence
    /// restricted to the eigenbasis family.
    pub fn purity(&self) -> Result<f64> {
        if !self.is_eigenbasis() {
            return Err(Error::invalid_parameter(
                "mode",
                "purity needs the biorthonormal eigenbasis family",
            ));
        }
        Ok(self.weights.iter().map(|p| p * p).sum())
    }

    /// A state is pure exactly when a single weight carries all the mass.
    pub fn is_pure(&self) -> Result<bool> {
        Ok(self.purity()? >= 1.0 - 1e-12)
    }

    /// Tr(R(t)B) = Σ_m p_m ∫ b(x) u_m(x,t) v_m(x,t) dx, the operator-side
    /// average of the observable.
    pub fn expectation_trace<F: Fn(f64) -> f64>(
        &self,
        t: f64,
        obs: &Observable<F>,
        quad: &QuadratureGrid,
    ) -> Result<f64> {
        self.check_time(t)?;
        let mut total = 0.0;
        for (&x, &w) in quad.nodes.iter().zip(&quad.weights) {
            let bx = obs.probe(x)?;
            if bx == 0.0 {
                continue;
            }
            let mut density = 0.0;
            for (m, &p) in self.weights.iter().enumerate() {
                let (u, v) = self.solution_pair(m, x, t);
                density += p * u * v;
            }
            total += w * bx * density;
        }
        Ok(total)
    }

    /// max over the index pairs of |⟨u_m(·,t), v_n(·,t)⟩ − δ_{mn}|.
    pub fn biortho_check(&self, t: f64, pairs: &[(usize, usize)], quad: &QuadratureGrid) -> Result<f64> {
        if !self.is_eigenbasis() {
            return Err(Error::invalid_parameter(
                "mode",
                "biorthonormality is an eigenbasis-family property",
            ));
        }
        self.check_time(t)?;
        let mut worst = 0.0f64;
        for &(m, n) in pairs {
            if m >= self.len() || n >= self.len() {
                return Err(Error::invalid_parameter("pairs", format!("index ({m}, {n}) outside the family")));
            }
            let mut pairing = 0.0;
            for (&x, &w) in quad.nodes.iter().zip(&quad.weights) {
                let (u, _) = self.solution_pair(m, x, t);
                let (_, v) = self.solution_pair(n, x, t);
                pairing += w * u * v;
            }
            let target = if m == n { 1.0 } else { 0.0 };
            worst = worst.max((pairing - target).abs());
        }
        Ok(worst)
    }
}

fn normalize_weights(weights: Vec<f64>) -> Result<(Vec<f64>, f64)> {
    if weights.is_empty() {
        return Err(Error::InvalidWeights { reason: "need at least one weight".into() });
    }
    if weights.iter().any(|&w| !(w.is_finite() && w >= 0.0)) {
        return Err(Error::InvalidWeights { reason: "weights must be finite and nonnegative".into() });
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidWeights { reason: "weights must carry positive total mass".into() });
    }
    Ok((weights.into_iter().map(|w| w / total).collect(), 1.0 / total))
}

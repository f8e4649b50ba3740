//! Reciprocal processes built from a heat kernel and an endpoint measure.
//!
//! The kernel supplies all finite-dimensional densities; the endpoint measure
//! decides whether the resulting law is Markov. Point-mass endpoints give the
//! pinned (bridge) law, the diagonal Gibbs coupling gives a stationary
//! non-Markov law, and mixtures interpolate between pinned laws.

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::kernels::HeatKernel;
use crate::numeric::log_sum_exp;
use crate::quadrature::{gaussian_tail_radius, integrate_region};

/// Endpoint coupling for a reciprocal process on [0, T].
///
/// `Mixture` components must themselves be `PinnedProduct` or `GibbsDiagonal`;
/// nesting mixtures adds nothing and is rejected.
#[derive(Debug, Clone, PartialEq)]
pub enum EndpointMeasure {
    /// δ_a ⊗ δ_b: the process is pinned at `a` for t = 0 and `b` for t = T.
    PinnedProduct { a: Vec<f64>, b: Vec<f64> },
    /// Z^{-1} g(x, T, y) dx δ_x(dy): both endpoints share one coordinate,
    /// weighted by the kernel's own return density.
    GibbsDiagonal,
    /// Convex combination of the other two variants.
    Mixture { weights: Vec<f64>, components: Vec<EndpointMeasure> },
}

impl EndpointMeasure {
    pub fn pinned(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.is_empty() || a.len() != b.len() {
            return Err(Error::DimensionMismatch { expected: a.len().max(1), got: b.len() });
        }
        if a.iter().chain(&b).any(|c| !c.is_finite()) {
            return Err(Error::invalid_parameter("endpoints", "coordinates must be finite"));
        }
        Ok(EndpointMeasure::PinnedProduct { a, b })
    }

    /// Weights must be strictly positive; they are renormalized to sum to one
    /// so callers may pass unnormalized masses.
    pub fn mixture(weights: Vec<f64>, components: Vec<EndpointMeasure>) -> Result<Self> {
        if weights.is_empty() || weights.len() != components.len() {
            return Err(Error::InvalidWeights {
                reason: format!("{} weights for {} components", weights.len(), components.len()),
            });
        }
        if weights.iter().any(|&w| !(w.is_finite() && w > 0.0)) {
            return Err(Error::InvalidWeights { reason: "weights must be finite and positive".into() });
        }
        if components.iter().any(|c| matches!(c, EndpointMeasure::Mixture { .. })) {
            return Err(Error::InvalidWeights { reason: "mixture components cannot be mixtures".into() });
        }
        let dims: Vec<usize> = components.iter().filter_map(|c| c.dimension()).collect();
        if dims.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::InvalidWeights { reason: "mixture components differ in dimension".into() });
        }
        let total: f64 = weights.iter().sum();
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(EndpointMeasure::Mixture { weights, components })
    }

    /// Coordinate dimension when the measure fixes one; `GibbsDiagonal`
    /// inherits its dimension from the kernel.
    pub fn dimension(&self) -> Option<usize> {
        match self {
            EndpointMeasure::PinnedProduct { a, .. } => Some(a.len()),
            EndpointMeasure::GibbsDiagonal => None,
            EndpointMeasure::Mixture { components, .. } => {
                components.iter().find_map(|c| c.dimension())
            }
        }
    }
}

/// Structural Markov classification of an endpoint measure.
///
/// The decision is purely syntactic: a product of point masses factorizes, so
/// the law is Markov; the Gibbs diagonal and any genuine mixture correlate the
/// two endpoints and break the Markov property. `Markov` is reserved for
/// product measures with diffuse factors, which no current variant builds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureClass {
    Markov,
    MarkovProductForm,
    NonMarkovMixture,
}

pub fn classify_measure(measure: &EndpointMeasure) -> MeasureClass {
    match measure {
        EndpointMeasure::PinnedProduct { .. } => MeasureClass::MarkovProductForm,
        EndpointMeasure::GibbsDiagonal => MeasureClass::NonMarkovMixture,
        EndpointMeasure::Mixture { components, .. } => {
            if components.len() == 1 {
                classify_measure(&components[0])
            } else {
                MeasureClass::NonMarkovMixture
            }
        }
    }
}

/// Axis-aligned box used as the target region of a two-sided transition.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxRegion {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len().max(1), got: upper.len() });
        }
        for (i, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::invalid_parameter(
                    "region",
                    format!("axis {i} bounds [{lo}, {hi}] are not an interval"),
                ));
            }
        }
        Ok(BoxRegion { lower, upper })
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }
}

/// Density of the midpoint z at time r given X_s = y and X_t = x:
///
///   q = g(x, t − r, z) · g(z, r − s, y) / g(x, t − s, y),
///
/// evaluated in log space so deep tails divide cleanly. Requires
/// 0 ≤ s < r < t ≤ horizon.
pub fn reciprocal_density<K: HeatKernel + ?Sized>(
    kernel: &K,
    x: &[f64],
    t: f64,
    z: &[f64],
    r: f64,
    y: &[f64],
    s: f64,
) -> Result<f64> {
    check_triple_times(kernel.horizon(), s, r, t)?;
    let log_q = kernel.log_evaluate(x, t - r, z)? + kernel.log_evaluate(z, r - s, y)?
        - kernel.log_evaluate(x, t - s, y)?;
    Ok(log_q.exp())
}

/// Probability that the midpoint at time r lands in `region`, given the same
/// two-sided conditioning as `reciprocal_density`. `tol` is the quadrature
/// settlement tolerance.
///
/// The integrand is concentrated around the segment between x and y; the
/// region is clipped to that effective support before integration, so very
/// large boxes behave like ℝ^d and boxes far from the support return 0.
pub fn two_sided_transition<K: HeatKernel + ?Sized>(
    kernel: &K,
    x: &[f64],
    t: f64,
    region: &BoxRegion,
    r: f64,
    y: &[f64],
    s: f64,
    tol: f64,
) -> Result<f64> {
    check_triple_times(kernel.horizon(), s, r, t)?;
    let d = kernel.dimension();
    if region.dimension() != d {
        return Err(Error::DimensionMismatch { expected: d, got: region.dimension() });
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::invalid_parameter("tol", format!("must be positive, got {tol}")));
    }
    // Support estimate: the conditional spread never exceeds the longer free
    // leg, and the conditional mean lies between the pinned points.
    let reach = gaussian_tail_radius((t - r).max(r - s).sqrt(), 1e-14);
    let mut lower = Vec::with_capacity(d);
    let mut upper = Vec::with_capacity(d);
    for i in 0..d {
        let lo = region.lower()[i].max(x[i].min(y[i]) - reach);
        let hi = region.upper()[i].min(x[i].max(y[i]) + reach);
        if lo >= hi {
            return Ok(0.0);
        }
        lower.push(lo);
        upper.push(hi);
    }
    let log_denom = kernel.log_evaluate(x, t - s, y)?;
    let mut kernel_error = None;
    let mass = integrate_region(&lower, &upper, tol, |z| {
        let log_q = kernel
            .log_evaluate(x, t - r, z)
            .and_then(|a| Ok(a + kernel.log_evaluate(z, r - s, y)?));
        match log_q {
            Ok(v) => (v - log_denom).exp(),
            Err(e) => {
                kernel_error.get_or_insert(e);
                0.0
            }
        }
    })?;
    if let Some(e) = kernel_error {
        return Err(e);
    }
    // Quadrature noise can overshoot the probability range by O(tol).
    Ok(mass.clamp(0.0, 1.0))
}

/// Log joint density of the process at the grid times.
///
/// For pinned endpoints this is the bridge chain
///   Π_k g(x_k, t_k − t_{k−1}, x_{k−1}) · g(b, T − t_n, x_n) / g(a, T, b)
/// with x_0 = a, t_0 = 0. For the Gibbs diagonal the endpoint integral has a
/// closed form: the chain closes into a cycle through the gap of length
/// T − (t_n − t_1) and is weighted by the kernel's partition value. Mixtures
/// combine component log densities through `log_sum_exp`.
pub fn fdd_log_density<K: HeatKernel + ?Sized>(
    measure: &EndpointMeasure,
    kernel: &K,
    grid: &TimeGrid,
    points: &[Vec<f64>],
) -> Result<f64> {
    check_grid_points(kernel, grid, points)?;
    let times = grid.times();
    let horizon = grid.horizon();
    let value = match measure {
        EndpointMeasure::PinnedProduct { a, b } => {
            let mut log_p = -kernel.log_evaluate(a, horizon, b)?;
            let mut prev: &[f64] = a;
            let mut prev_t = 0.0;
            for (x, &t) in points.iter().zip(times) {
                log_p += kernel.log_evaluate(x, t - prev_t, prev)?;
                prev = x;
                prev_t = t;
            }
            log_p + kernel.log_evaluate(b, horizon - times[times.len() - 1], prev)?
        }
        EndpointMeasure::GibbsDiagonal => {
            let mut log_p = -kernel.partition()?.ln();
            for k in 1..points.len() {
                log_p += kernel.log_evaluate(&points[k], times[k] - times[k - 1], &points[k - 1])?;
            }
            let wrap = horizon - (times[times.len() - 1] - times[0]);
            log_p + kernel.log_evaluate(&points[0], wrap, &points[points.len() - 1])?
        }
        EndpointMeasure::Mixture { weights, components } => {
            let mut terms = Vec::with_capacity(weights.len());
            for (w, component) in weights.iter().zip(components) {
                terms.push(w.ln() + fdd_log_density(component, kernel, grid, points)?);
            }
            log_sum_exp(&terms)
        }
    };
    if value.is_nan() {
        return Err(Error::invalid_parameter("points", "joint density evaluated to NaN"));
    }
    Ok(value)
}

/// Single-time marginal density at 0 < t < horizon.
///
/// Pinned endpoints give the forward/backward product
/// g(x, t, a) g(b, T − t, x) / g(a, T, b); the Gibbs diagonal is stationary
/// with density Z^{-1} g(x, T, x) independent of t.
pub fn marginal_density<K: HeatKernel + ?Sized>(
    measure: &EndpointMeasure,
    kernel: &K,
    t: f64,
    x: &[f64],
) -> Result<f64> {
    let horizon = kernel.horizon();
    if !(t.is_finite() && t > 0.0 && t < horizon) {
        return Err(Error::TimeOutOfRange { t, horizon });
    }
    match measure {
        EndpointMeasure::PinnedProduct { a, b } => {
            let log_p = kernel.log_evaluate(x, t, a)? + kernel.log_evaluate(b, horizon - t, x)?
                - kernel.log_evaluate(a, horizon, b)?;
            Ok(log_p.exp())
        }
        EndpointMeasure::GibbsDiagonal => {
            Ok((kernel.log_evaluate(x, horizon, x)? - kernel.partition()?.ln()).exp())
        }
        EndpointMeasure::Mixture { weights, components } => {
            let mut total = 0.0;
            for (w, component) in weights.iter().zip(components) {
                total += w * marginal_density(component, kernel, t, x)?;
            }
            Ok(total)
        }
    }
}

/// Markov defect of a scalar Gaussian covariance at times s ≤ t ≤ u:
///
///   K(s, u) K(t, t) − K(s, t) K(t, u).
///
/// Zero (up to rounding) exactly when conditioning on X_t screens X_s from
/// X_u, the Gaussian form of the Markov property. The degenerate triple u = t
/// cancels identically.
pub fn gaussian_markov_ratio(cov: impl Fn(f64, f64) -> f64, s: f64, t: f64, u: f64) -> Result<f64> {
    if !(s.is_finite() && t.is_finite() && u.is_finite() && s <= t && t <= u) {
        return Err(Error::invalid_parameter("times", format!("need s ≤ t ≤ u, got {s}, {t}, {u}")));
    }
    let kss = cov(s, s);
    let ktt = cov(t, t);
    let kuu = cov(u, u);
    if !(kss > 0.0 && ktt > 0.0 && kuu > 0.0) {
        return Err(Error::NotPositiveDefinite {
            reason: format!("variances at ({s}, {t}, {u}) are {kss:.3e}, {ktt:.3e}, {kuu:.3e}"),
        });
    }
    let kst = cov(s, t);
    let ktu = cov(t, u);
    let ksu = cov(s, u);
    // Cauchy-Schwarz with a rounding allowance; a violation means the
    // supplied function is not a covariance.
    let slack = 1.0 + 1e-9;
    if kst * kst > kss * ktt * slack || ktu * ktu > ktt * kuu * slack || ksu * ksu > kss * kuu * slack
    {
        return Err(Error::NotPositiveDefinite {
            reason: format!("covariance triple at ({s}, {t}, {u}) violates Cauchy-Schwarz"),
        });
    }
    Ok(ksu * ktt - kst * ktu)
}

/// Absolute change of the log joint density under a time shift τ of the whole
/// grid. Identically zero for laws invariant under time translation; the
/// shifted grid must stay inside (0, horizon).
pub fn stationarity_residual<K: HeatKernel + ?Sized>(
    measure: &EndpointMeasure,
    kernel: &K,
    grid: &TimeGrid,
    points: &[Vec<f64>],
    shift: f64,
) -> Result<f64> {
    if !shift.is_finite() {
        return Err(Error::invalid_parameter("shift", "must be finite"));
    }
    let shifted = TimeGrid::new(grid.times().iter().map(|&t| t + shift).collect(), grid.horizon())
        .map_err(|_| {
            Error::invalid_grid(format!("shift {shift} moves the grid outside (0, {})", grid.horizon()))
        })?;
    let base = fdd_log_density(measure, kernel, grid, points)?;
    let moved = fdd_log_density(measure, kernel, &shifted, points)?;
    Ok((moved - base).abs())
}

fn check_triple_times(horizon: f64, s: f64, r: f64, t: f64) -> Result<()> {
    for v in [s, r, t] {
        if !v.is_finite() {
            return Err(Error::TimeOutOfRange { t: v, horizon });
        }
    }
    if !(0.0 <= s && s < r && r < t && t <= horizon) {
        return Err(Error::invalid_parameter(
            "times",
            format!("need 0 ≤ s < r < t ≤ {horizon}, got s = {s}, r = {r}, t = {t}"),
        ));
    }
    Ok(())
}

fn check_grid_points<K: HeatKernel + ?Sized>(
    kernel: &K,
    grid: &TimeGrid,
    points: &[Vec<f64>],
) -> Result<()> {
    if points.len() != grid.len() {
        return Err(Error::invalid_grid(format!(
            "{} evaluation points for {} grid times",
            points.len(),
            grid.len()
        )));
    }
    if grid.horizon() != kernel.horizon() {
        return Err(Error::invalid_grid(format!(
            "grid horizon {} does not match kernel horizon {}",
            grid.horizon(),
            kernel.horizon()
        )));
    }
    let d = kernel.dimension();
    for x in points {
        if x.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: x.len() });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{mehler_eval, MehlerKernel};
    use crate::spectral::HarmonicSpec;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn unit_kernel() -> MehlerKernel {
        MehlerKernel::new(HarmonicSpec::new(1, 1.0, 1.0).unwrap())
    }

    #[test]
    fn reciprocal_density_matches_kernel_ratio() {
        let kernel = unit_kernel();
        let spec = kernel.spec();
        let q = reciprocal_density(&kernel, &[0.0], 1.0, &[0.0], 0.5, &[0.0], 0.0).unwrap();
        let g_half = mehler_eval(spec, &[0.0], 0.5, &[0.0]).unwrap();
        let g_full = mehler_eval(spec, &[0.0], 1.0, &[0.0]).unwrap();
        assert_relative_eq!(q, g_half * g_half / g_full, max_relative = 1e-14);
    }

    #[test]
    fn reciprocal_density_rejects_unordered_times() {
        let kernel = unit_kernel();
        assert!(reciprocal_density(&kernel, &[0.0], 0.5, &[0.0], 0.5, &[0.0], 0.0).is_err());
        assert!(reciprocal_density(&kernel, &[0.0], 1.2, &[0.0], 0.5, &[0.0], 0.0).is_err());
        assert!(reciprocal_density(&kernel, &[0.0], 0.9, &[0.0], 0.5, &[0.0], -0.1).is_err());
    }

    #[test]
    fn two_sided_transition_normalizes() {
        let kernel = unit_kernel();
        let whole = BoxRegion::new(vec![-60.0], vec![60.0]).unwrap();
        let mass =
            two_sided_transition(&kernel, &[0.4], 0.9, &whole, 0.5, &[-0.2], 0.1, 1e-9).unwrap();
        assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn complementary_regions_split_the_mass() {
        let kernel = unit_kernel();
        let left = BoxRegion::new(vec![-60.0], vec![0.1]).unwrap();
        let right = BoxRegion::new(vec![0.1], vec![60.0]).unwrap();
        let args = (&[0.4f64], 0.9f64, 0.5f64, &[-0.2f64], 0.1f64);
        let p_left =
            two_sided_transition(&kernel, args.0, args.1, &left, args.2, args.3, args.4, 1e-9)
                .unwrap();
        let p_right =
            two_sided_transition(&kernel, args.0, args.1, &right, args.2, args.3, args.4, 1e-9)
                .unwrap();
        assert!(p_left > 0.05 && p_right > 0.05);
        assert_abs_diff_eq!(p_left + p_right, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn short_leg_concentrates_at_the_known_end() {
        // As r ↓ s the midpoint has no room to move away from y.
        let kernel = unit_kernel();
        let near_y = BoxRegion::new(vec![-0.25], vec![-0.15]).unwrap();
        // conditional spread ≈ √(r − s) = 0.01, so the window is ±5σ
        let mass =
            two_sided_transition(&kernel, &[0.4], 0.9, &near_y, 0.1001, &[-0.2], 0.1, 1e-9).unwrap();
        assert!(mass > 0.9999, "mass {mass} should concentrate near y");
    }

    #[test]
    fn distant_region_has_negligible_mass() {
        let kernel = unit_kernel();
        let far = BoxRegion::new(vec![30.0], vec![40.0]).unwrap();
        let mass = two_sided_transition(&kernel, &[0.4], 0.9, &far, 0.5, &[-0.2], 0.1, 1e-9).unwrap();
        assert_abs_diff_eq!(mass, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn pinned_fdd_matches_direct_chain() {
        let kernel = unit_kernel();
        let spec = kernel.spec();
        let measure = EndpointMeasure::pinned(vec![0.2], vec![-0.4]).unwrap();
        let grid = TimeGrid::new(vec![0.3, 0.7], 1.0).unwrap();
        let points = vec![vec![0.1], vec![-0.2]];
        let log_p = fdd_log_density(&measure, &kernel, &grid, &points).unwrap();
        let expected = (mehler_eval(spec, &[0.1], 0.3, &[0.2]).unwrap()
            * mehler_eval(spec, &[-0.2], 0.4, &[0.1]).unwrap()
            * mehler_eval(spec, &[-0.4], 0.3, &[-0.2]).unwrap()
            / mehler_eval(spec, &[0.2], 1.0, &[-0.4]).unwrap())
        .ln();
        assert_relative_eq!(log_p, expected, max_relative = 1e-13);
    }

    #[test]
    fn gibbs_single_time_matches_stationary_marginal() {
        let kernel = unit_kernel();
        let spec = kernel.spec();
        let grid = TimeGrid::new(vec![0.37], 1.0).unwrap();
        let x = [0.6];
        let log_p =
            fdd_log_density(&EndpointMeasure::GibbsDiagonal, &kernel, &grid, &[x.to_vec()]).unwrap();
        let z = kernel.partition().unwrap();
        let expected = (mehler_eval(spec, &x, 1.0, &x).unwrap() / z).ln();
        assert_relative_eq!(log_p, expected, max_relative = 1e-13);
        let marginal = marginal_density(&EndpointMeasure::GibbsDiagonal, &kernel, 0.37, &x).unwrap();
        assert_relative_eq!(marginal, log_p.exp(), max_relative = 1e-13);
    }

    #[test]
    fn pinned_marginal_equals_single_time_fdd() {
        let kernel = unit_kernel();
        let measure = EndpointMeasure::pinned(vec![0.0], vec![0.5]).unwrap();
        let grid = TimeGrid::new(vec![0.42], 1.0).unwrap();
        let x = [0.3];
        let log_p = fdd_log_density(&measure, &kernel, &grid, &[x.to_vec()]).unwrap();
        let marginal = marginal_density(&measure, &kernel, 0.42, &x).unwrap();
        assert_relative_eq!(marginal, log_p.exp(), max_relative = 1e-13);
    }

    #[test]
    fn mixture_fdd_is_log_sum_of_components() {
        let kernel = unit_kernel();
        let pinned_a = EndpointMeasure::pinned(vec![0.0], vec![0.0]).unwrap();
        let pinned_b = EndpointMeasure::pinned(vec![0.5], vec![-0.5]).unwrap();
        let mixture =
            EndpointMeasure::mixture(vec![0.3, 0.7], vec![pinned_a.clone(), pinned_b.clone()])
                .unwrap();
        let grid = TimeGrid::new(vec![0.25, 0.5, 0.75], 1.0).unwrap();
        let points = vec![vec![0.1], vec![0.0], vec![-0.1]];
        let lp = fdd_log_density(&mixture, &kernel, &grid, &points).unwrap();
        let la = fdd_log_density(&pinned_a, &kernel, &grid, &points).unwrap();
        let lb = fdd_log_density(&pinned_b, &kernel, &grid, &points).unwrap();
        let direct = (0.3 * la.exp() + 0.7 * lb.exp()).ln();
        assert_relative_eq!(lp, direct, max_relative = 1e-12);
    }

    #[test]
    fn mixture_weights_are_renormalized() {
        let pinned = EndpointMeasure::pinned(vec![0.0], vec![0.0]).unwrap();
        let m =
            EndpointMeasure::mixture(vec![2.0, 6.0], vec![pinned.clone(), pinned.clone()]).unwrap();
        match m {
            EndpointMeasure::Mixture { weights, .. } => {
                assert_abs_diff_eq!(weights[0], 0.25, epsilon = 1e-15);
                assert_abs_diff_eq!(weights[1], 0.75, epsilon = 1e-15);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn invalid_mixtures_are_rejected() {
        let pinned = EndpointMeasure::pinned(vec![0.0], vec![0.0]).unwrap();
        assert!(EndpointMeasure::mixture(vec![1.0], vec![]).is_err());
        assert!(EndpointMeasure::mixture(vec![-1.0, 2.0], vec![pinned.clone(), pinned.clone()])
            .is_err());
        let nested = EndpointMeasure::mixture(vec![1.0], vec![pinned.clone()]).unwrap();
        assert!(EndpointMeasure::mixture(vec![0.5, 0.5], vec![pinned.clone(), nested]).is_err());
        let wide = EndpointMeasure::pinned(vec![0.0, 0.0], vec![0.0, 0.0]).unwrap();
        assert!(EndpointMeasure::mixture(vec![0.5, 0.5], vec![pinned, wide]).is_err());
    }

    #[test]
    fn classification_is_structural() {
        let pinned = EndpointMeasure::pinned(vec![0.0], vec![1.0]).unwrap();
        assert_eq!(classify_measure(&pinned), MeasureClass::MarkovProductForm);
        assert_eq!(
            classify_measure(&EndpointMeasure::GibbsDiagonal),
            MeasureClass::NonMarkovMixture
        );
        let two = EndpointMeasure::mixture(
            vec![0.5, 0.5],
            vec![pinned.clone(), EndpointMeasure::pinned(vec![1.0], vec![0.0]).unwrap()],
        )
        .unwrap();
        assert_eq!(classify_measure(&two), MeasureClass::NonMarkovMixture);
        // A one-component mixture is the component in disguise.
        let one = EndpointMeasure::mixture(vec![1.0], vec![pinned]).unwrap();
        assert_eq!(classify_measure(&one), MeasureClass::MarkovProductForm);
    }

    #[test]
    fn markov_ratio_vanishes_for_product_covariances() {
        // K(s, t) = f(s ∧ t) g(s ∨ t) is the general scalar Markov form.
        let cov = |a: f64, b: f64| {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            (1.0 + lo) * (3.0 - hi)
        };
        let r = gaussian_markov_ratio(cov, 0.2, 0.5, 0.9).unwrap();
        assert_abs_diff_eq!(r, 0.0, epsilon = 1e-14);
        let degenerate = gaussian_markov_ratio(cov, 0.2, 0.9, 0.9).unwrap();
        assert_abs_diff_eq!(degenerate, 0.0, epsilon = 1e-16);
    }

    #[test]
    fn markov_ratio_detects_long_range_coupling() {
        // Periodic-type covariance: cosh in the time separation, scale-free.
        let cov = |a: f64, b: f64| ((a - b).abs() - 0.5).cosh();
        let r = gaussian_markov_ratio(cov, 0.0, 0.25, 0.5).unwrap();
        // cosh(0.5) − cosh(0.25)^2, frozen independently.
        assert_abs_diff_eq!(r, 0.063813, epsilon = 5e-7);
        assert_abs_diff_eq!(r, 0.5f64.cosh() - 0.25f64.cosh().powi(2), epsilon = 1e-15);
    }

    #[test]
    fn markov_ratio_rejects_bad_covariances() {
        assert!(gaussian_markov_ratio(|_, _| -1.0, 0.1, 0.2, 0.3).is_err());
        // Off-diagonal exceeding the diagonal violates Cauchy-Schwarz.
        let bad = |a: f64, b: f64| if a == b { 1.0 } else { 2.0 };
        assert!(gaussian_markov_ratio(bad, 0.1, 0.2, 0.3).is_err());
        // Unordered times are a caller bug.
        assert!(gaussian_markov_ratio(|_, _| 1.0, 0.3, 0.2, 0.1).is_err());
    }

    #[test]
    fn gibbs_law_is_shift_invariant() {
        let kernel = unit_kernel();
        let grid = TimeGrid::new(vec![0.2, 0.4, 0.6], 1.0).unwrap();
        let points = vec![vec![0.3], vec![-0.1], vec![0.2]];
        let residual =
            stationarity_residual(&EndpointMeasure::GibbsDiagonal, &kernel, &grid, &points, 0.3)
                .unwrap();
        assert_abs_diff_eq!(residual, 0.0, epsilon = 1e-12);
        // Zero shift compares the grid with itself.
        let zero =
            stationarity_residual(&EndpointMeasure::GibbsDiagonal, &kernel, &grid, &points, 0.0)
                .unwrap();
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn pinned_law_is_not_shift_invariant() {
        let kernel = unit_kernel();
        let measure = EndpointMeasure::pinned(vec![0.8], vec![-0.8]).unwrap();
        let grid = TimeGrid::new(vec![0.2, 0.4], 1.0).unwrap();
        let points = vec![vec![0.5], vec![0.1]];
        let residual = stationarity_residual(&measure, &kernel, &grid, &points, 0.3).unwrap();
        assert!(residual > 1e-3, "bridge should notice the shift, got {residual}");
    }

    #[test]
    fn shift_leaving_the_window_is_rejected() {
        let kernel = unit_kernel();
        let grid = TimeGrid::new(vec![0.2, 0.8], 1.0).unwrap();
        let points = vec![vec![0.0], vec![0.0]];
        let err =
            stationarity_residual(&EndpointMeasure::GibbsDiagonal, &kernel, &grid, &points, 0.5);
        assert!(err.is_err());
    }

    #[test]
    fn grid_and_points_must_agree() {
        let kernel = unit_kernel();
        let measure = EndpointMeasure::pinned(vec![0.0], vec![0.0]).unwrap();
        let grid = TimeGrid::new(vec![0.5], 1.0).unwrap();
        assert!(fdd_log_density(&measure, &kernel, &grid, &[]).is_err());
        assert!(fdd_log_density(&measure, &kernel, &grid, &[vec![0.0, 0.0]]).is_err());
        let other_horizon = TimeGrid::new(vec![0.5], 2.0).unwrap();
        assert!(fdd_log_density(&measure, &kernel, &other_horizon, &[vec![0.0]]).is_err());
    }
}

//! Monte Carlo counterparts of the closed-form laws: exact Gaussian draws
//! through the Cholesky factor, sequential bridge sampling from the one-step
//! conditional, endpoint mixtures with component labels, a left-point Euler
//! scheme for the periodic integral representation, and z-score comparison
//! of empirical moments against an analytic law.
//!
//! Reproducibility contract: every ensemble is a pure function of
//! (seed, generator id, parameters). Path p draws from stream p of a
//! counter-based generator seeded once, so paths can be filled on any number
//! of worker threads in any order and the result is bit-identical. Each
//! sampler documents its draw order; changing it is a breaking change to the
//! generator id.

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::numeric::{sinh_ratio, sinhc};
use crate::oscillator::{BridgeSpec, GaussianProcessLaw};
use crate::spectral::HarmonicSpec;
use nalgebra::{Cholesky, DMatrix, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Default |z| threshold for `empirical_compare`.
pub const DEFAULT_Z_GATE: f64 = 4.0;

/// N sampled paths on a time grid, stored flat (path, time, coordinate).
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    grid: TimeGrid,
    dimension: usize,
    seed: u64,
    generator_id: &'static str,
    values: Vec<f64>,
}

impl PathEnsemble {
    fn allocate(
        grid: TimeGrid,
        dimension: usize,
        count: usize,
        seed: u64,
        generator_id: &'static str,
    ) -> Result<Self> {
        if count == 0 {
            return Err(Error::invalid_parameter("count", "need at least one path"));
        }
        let values = vec![0.0; count * grid.len() * dimension];
        Ok(PathEnsemble { grid, dimension, seed, generator_id, values })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Number of paths N.
    pub fn count(&self) -> usize {
        self.values.len() / (self.grid.len() * self.dimension)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Identifies the sampling algorithm and its draw order.
    pub fn generator_id(&self) -> &'static str {
        self.generator_id
    }

    /// Path p as a row-major (time, coordinate) slice of length n·d.
    pub fn path(&self, p: usize) -> &[f64] {
        let stride = self.grid.len() * self.dimension;
        &self.values[p * stride..(p + 1) * stride]
    }

    pub fn value(&self, p: usize, k: usize, j: usize) -> f64 {
        self.path(p)[k * self.dimension + j]
    }

    /// Empirical moments with their standard errors. Needs N ≥ 2.
    ///
    /// The covariance pools the d coordinates: they are iid copies of the
    /// scalar process, so the pooled estimate sees N·d samples. Standard
    /// errors for the covariance come from the spread of the centered
    /// products, which absorbs the non-Gaussian fourth-moment correction.
    pub fn statistics(&self) -> Result<EmpiricalStats> {
        let n = self.grid.len();
        let d = self.dimension;
        let count = self.count();
        if count < 2 {
            return Err(Error::invalid_parameter("count", "standard errors need at least two paths"));
        }
        let stride = n * d;
        let scale = 1.0 / count as f64;

        let mut mean = vec![vec![0.0; d]; n];
        for p in 0..count {
            let path = &self.values[p * stride..(p + 1) * stride];
            for k in 0..n {
                for j in 0..d {
                    mean[k][j] += path[k * d + j];
                }
            }
        }
        for row in &mut mean {
            for m in row {
                *m *= scale;
            }
        }

        let mut mean_se = vec![vec![0.0; d]; n];
        let mut cov_sum: DMatrix<f64> = DMatrix::zeros(n, n);
        let mut cov_sq: DMatrix<f64> = DMatrix::zeros(n, n);
        for p in 0..count {
            let path = &self.values[p * stride..(p + 1) * stride];
            for j in 0..d {
                for k in 0..n {
                    let dk = path[k * d + j] - mean[k][j];
                    mean_se[k][j] += dk * dk;
                    for l in k..n {
                        let w = dk * (path[l * d + j] - mean[l][j]);
                        cov_sum[(k, l)] += w;
                        cov_sq[(k, l)] += w * w;
                    }
                }
            }
        }
        for row in mean_se.iter_mut() {
            for v in row.iter_mut() {
                // sd of one draw over √N, with the N−1 mean correction
                *v = (*v / (count as f64 - 1.0)).sqrt() * scale.sqrt();
            }
        }
        let pooled = (count * d) as f64;
        let mut cov = DMatrix::zeros(n, n);
        let mut cov_se = DMatrix::zeros(n, n);
        for k in 0..n {
            for l in k..n {
                let m1 = cov_sum[(k, l)] / pooled;
                let var_w = (cov_sq[(k, l)] / pooled - m1 * m1).max(0.0);
                let est = cov_sum[(k, l)] / (d as f64 * (count as f64 - 1.0));
                let se = (var_w / pooled).sqrt();
                cov[(k, l)] = est;
                cov[(l, k)] = est;
                cov_se[(k, l)] = se;
                cov_se[(l, k)] = se;
            }
        }
        Ok(EmpiricalStats { mean, mean_se, cov, cov_se })
    }
}

/// Sample moments of an ensemble together with their standard errors.
#[derive(Debug, Clone)]
pub struct EmpiricalStats {
    /// Mean per (grid time, coordinate).
    pub mean: Vec<Vec<f64>>,
    /// Standard error of each mean entry.
    pub mean_se: Vec<Vec<f64>>,
    /// n × n scalar covariance, pooled over coordinates.
    pub cov: DMatrix<f64>,
    /// Standard error of each covariance entry.
    pub cov_se: DMatrix<f64>,
}

/// Entrywise z-scores of an ensemble against an analytic Gaussian law.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub mean_z: Vec<Vec<f64>>,
    pub cov_z: DMatrix<f64>,
    pub max_abs_z: f64,
    pub gate: f64,
    pub pass: bool,
    /// Distinct entries tested (covariance counted on the upper triangle).
    /// At the default gate the per-entry two-sided tail is ≈ 6.3e−5, so the
    /// family-wise false-alarm rate stays below comparisons × 6.3e−5.
    pub comparisons: usize,
}

/// Weighted family of bridges sharing one oscillator, mixed over terminals.
#[derive(Debug, Clone)]
pub struct BridgeMixture {
    weights: Vec<f64>,
    components: Vec<BridgeSpec>,
}

impl BridgeMixture {
    /// Weights are renormalized to sum one; components must share their
    /// oscillator parameters so every path lives under the same kernel.
    pub fn new(weights: Vec<f64>, components: Vec<BridgeSpec>) -> Result<Self> {
        if weights.is_empty() || weights.len() != components.len() {
            return Err(Error::InvalidWeights {
                reason: format!("{} weights for {} components", weights.len(), components.len()),
            });
        }
        if weights.iter().any(|&w| !(w.is_finite() && w > 0.0)) {
            return Err(Error::InvalidWeights { reason: "weights must be finite and positive".into() });
        }
        let shared = *components[0].spec();
        if components.iter().any(|c| *c.spec() != shared) {
            return Err(Error::invalid_parameter("components", "bridges must share one oscillator"));
        }
        let total: f64 = weights.iter().sum();
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(BridgeMixture { weights, components })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[BridgeSpec] {
        &self.components
    }

    pub fn spec(&self) -> &HarmonicSpec {
        self.components[0].spec()
    }
}

// Stream p of the shared seed; draws within a path are sequential.
fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

fn fill_parallel(
    values: &mut [f64],
    stride: usize,
    seed: u64,
    fill: impl Fn(&mut ChaCha8Rng, &mut [f64]) + Sync,
) {
    values.par_chunks_mut(stride).enumerate().for_each(|(p, chunk)| {
        let mut rng = path_rng(seed, p);
        fill(&mut rng, chunk);
    });
}

// One jitter of 1e-12·trace/n on the diagonal, then a hard error.
fn cholesky_with_jitter(matrix: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if let Some(chol) = Cholesky::new(matrix.clone()) {
        return Ok(chol);
    }
    let n = matrix.nrows();
    let jitter = 1e-12 * matrix.trace() / n as f64;
    let mut bumped = matrix.clone();
    for k in 0..n {
        bumped[(k, k)] += jitter;
    }
    Cholesky::new(bumped).ok_or_else(|| Error::NotPositiveDefinite {
        reason: format!("covariance failed factorization twice, jitter {jitter:.3e}"),
    })
}

/// Exact draws from N(mean, K ⊗ I_d): one Cholesky factor of the scalar
/// covariance, coordinates independent.
///
/// Draw order per path: coordinate-major, for each coordinate the n standard
/// normals of that column.
pub fn sample_gaussian_law(law: &GaussianProcessLaw, count: usize, seed: u64) -> Result<PathEnsemble> {
    let n = law.grid().len();
    let d = law.dimension();
    let chol = cholesky_with_jitter(law.scalar_cov())?;
    let factor = chol.l();
    let mean = law.mean();

    let mut ensemble =
        PathEnsemble::allocate(law.grid().clone(), d, count, seed, "gaussian-cholesky")?;
    fill_parallel(&mut ensemble.values, n * d, seed, |rng, path| {
        let mut z = vec![0.0; n];
        for j in 0..d {
            for slot in z.iter_mut() {
                *slot = rng.sample(StandardNormal);
            }
            for k in 0..n {
                let mut x = mean[k][j];
                for (i, &zi) in z.iter().take(k + 1).enumerate() {
                    x += factor[(k, i)] * zi;
                }
                path[k * d + j] = x;
            }
        }
    });
    Ok(ensemble)
}

// Coefficients of the one-step conditional from (s, x) to (t, y) given the
// terminal b: completing the square in g(y, t−s, x) g(b, T−t, y) leaves a
// Gaussian with mean c_x x + c_b b and the stated variance.
struct BridgeStep {
    carry: f64,
    pull: f64,
    sd: f64,
}

fn bridge_steps(spec: &HarmonicSpec, grid: &TimeGrid) -> Result<Vec<BridgeStep>> {
    let lambda = spec.lambda();
    let horizon = spec.horizon();
    let mut steps = Vec::with_capacity(grid.len());
    let mut s = 0.0;
    for &t in grid.times() {
        let gap = t - s;
        let remaining = horizon - s;
        // sinh(λ(T−t))/sinh(λ(T−s)) and sinh(λΔ)/sinh(λ(T−s))
        let carry = sinh_ratio(lambda * (horizon - t), lambda * remaining);
        let pull = sinh_ratio(lambda * gap, lambda * remaining);
        // sinh(λΔ) sinh(λ(T−t)) / (λ sinh(λ(T−s)))
        let variance = gap * sinhc(lambda * gap) * carry;
        if !(variance.is_finite() && variance > 0.0) {
            return Err(Error::NotPositiveDefinite {
                reason: format!("step variance {variance:.3e} over ({s}, {t})"),
            });
        }
        steps.push(BridgeStep { carry, pull, sd: variance.sqrt() });
        s = t;
    }
    Ok(steps)
}

/// Markov sampling of the bridge from the origin to its terminal, one
/// Gaussian step per grid time.
///
/// Draw order per path: time-major, the d coordinates of each step together.
pub fn sample_bridge_sequential(
    bspec: &BridgeSpec,
    grid: &TimeGrid,
    count: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    check_horizon(bspec.spec(), grid)?;
    let steps = bridge_steps(bspec.spec(), grid)?;
    let d = bspec.spec().dimension();
    let terminal = bspec.terminal().to_vec();

    let mut ensemble =
        PathEnsemble::allocate(grid.clone(), d, count, seed, "bridge-sequential")?;
    fill_parallel(&mut ensemble.values, grid.len() * d, seed, |rng, path| {
        let mut x = vec![0.0; d];
        for (k, step) in steps.iter().enumerate() {
            for (j, xj) in x.iter_mut().enumerate() {
                let z: f64 = rng.sample(StandardNormal);
                *xj = step.carry * *xj + step.pull * terminal[j] + step.sd * z;
                path[k * d + j] = *xj;
            }
        }
    });
    Ok(ensemble)
}

/// Mixture sampling: draw a component from the weights, then run the bridge
/// sampler for that terminal. Returns the per-path component labels.
///
/// Draw order per path: one uniform for the label, then the bridge steps.
pub fn sample_mixture(
    mix: &BridgeMixture,
    grid: &TimeGrid,
    count: usize,
    seed: u64,
) -> Result<(PathEnsemble, Vec<usize>)> {
    check_horizon(mix.spec(), grid)?;
    let steps = bridge_steps(mix.spec(), grid)?;
    let d = mix.spec().dimension();
    let weights = mix.weights().to_vec();
    let terminals: Vec<Vec<f64>> = mix.components().iter().map(|c| c.terminal().to_vec()).collect();

    let mut ensemble = PathEnsemble::allocate(grid.clone(), d, count, seed, "bridge-mixture")?;
    let mut labels = vec![0usize; count];
    let stride = grid.len() * d;
    ensemble
        .values
        .par_chunks_mut(stride)
        .zip(labels.par_iter_mut())
        .enumerate()
        .for_each(|(p, (path, label))| {
            let mut rng = path_rng(seed, p);
            let u: f64 = rng.random();
            let mut cumulative = 0.0;
            let mut m = weights.len() - 1;
            for (i, &w) in weights.iter().enumerate() {
                cumulative += w;
                if u < cumulative {
                    m = i;
                    break;
                }
            }
            *label = m;
            let terminal = &terminals[m];
            let mut x = vec![0.0; d];
            for (k, step) in steps.iter().enumerate() {
                for (j, xj) in x.iter_mut().enumerate() {
                    let z: f64 = rng.sample(StandardNormal);
                    *xj = step.carry * *xj + step.pull * terminal[j] + step.sd * z;
                    path[k * d + j] = *xj;
                }
            }
        });
    Ok((ensemble, labels))
}

// Left-point sums of the two Itô integrals on a uniform partition, sharing
// one increment sequence. reads must be sorted partition indices ≤ steps;
// the value recorded at index i is J_i = Σ_{τ<i} e^{−λ(i−τ)Δt} dW_τ, and the
// return value is (J at each read, J_steps).
fn periodic_integrals(
    rng: &mut ChaCha8Rng,
    lambda: f64,
    dt: f64,
    steps: usize,
    reads: &[usize],
    out: &mut [f64],
) -> f64 {
    let decay = (-lambda * dt).exp();
    let sqrt_dt = dt.sqrt();
    let mut j = 0.0;
    let mut next = 0;
    while next < reads.len() && reads[next] == 0 {
        out[next] = 0.0;
        next += 1;
    }
    for i in 0..steps {
        let dw: f64 = sqrt_dt * rng.sample::<f64, _>(StandardNormal);
        j = decay * (j + dw);
        while next < reads.len() && reads[next] == i + 1 {
            out[next] = j;
            next += 1;
        }
    }
    debug_assert_eq!(next, reads.len());
    j
}

/// Euler simulation of the periodic process from its representation as
/// e^{−λt}(1 − e^{−λT})^{−1} ∫₀^T e^{−λ(T−τ)}dW_τ + ∫₀^t e^{−λ(t−τ)}dW_τ
/// with both integrals over one Wiener path. Grid times are snapped to the
/// nearest partition point; the partition must be at least twice as fine as
/// the smallest grid gap, so snapped times stay distinct.
///
/// The two ends of the window coincide pathwise: at t = T the prefactor
/// collapses to the t = 0 value exactly, no matter the increments.
///
/// Draw order per path: coordinate-major, the `steps` increments in time
/// order.
pub fn simulate_periodic_ou(
    spec: &HarmonicSpec,
    grid: &TimeGrid,
    count: usize,
    seed: u64,
    steps: usize,
) -> Result<PathEnsemble> {
    check_horizon(spec, grid)?;
    let horizon = spec.horizon();
    let lambda = spec.lambda();
    let min_gap = grid
        .gaps_with_boundary()
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let dt = horizon / steps as f64;
    if !(steps >= 2 && dt <= 0.5 * min_gap) {
        return Err(Error::invalid_parameter(
            "steps",
            format!("{steps} steps resolve {dt:.3e}, need at most half the smallest gap {min_gap:.3e}"),
        ));
    }
    let reads: Vec<usize> =
        grid.times().iter().map(|&t| (t / dt).round() as usize).collect();
    // e^{−λ t_k}/(1 − e^{−λT}) at the snapped times
    let mass = -(-lambda * horizon).exp_m1();
    let fronts: Vec<f64> =
        reads.iter().map(|&i| (-lambda * (i as f64 * dt)).exp() / mass).collect();
    let n = grid.len();
    let d = spec.dimension();

    let mut ensemble = PathEnsemble::allocate(grid.clone(), d, count, seed, "periodic-ou-euler")?;
    fill_parallel(&mut ensemble.values, n * d, seed, |rng, path| {
        let mut partial = vec![0.0; n];
        for j in 0..d {
            let total = periodic_integrals(rng, lambda, dt, steps, &reads, &mut partial);
            for k in 0..n {
                path[k * d + j] = fronts[k] * total + partial[k];
            }
        }
    });
    Ok(ensemble)
}

/// Entrywise z-scores of the ensemble's moments against the law's. The gate
/// applies to the largest |z| over means and the covariance upper triangle.
pub fn empirical_compare(
    ensemble: &PathEnsemble,
    law: &GaussianProcessLaw,
    gate: f64,
) -> Result<ComparisonReport> {
    if ensemble.grid() != law.grid() {
        return Err(Error::invalid_grid("ensemble and law live on different grids"));
    }
    if ensemble.dimension() != law.dimension() {
        return Err(Error::DimensionMismatch {
            expected: law.dimension(),
            got: ensemble.dimension(),
        });
    }
    if !(gate.is_finite() && gate > 0.0) {
        return Err(Error::invalid_parameter("gate", format!("must be positive, got {gate}")));
    }
    let stats = ensemble.statistics()?;
    let n = law.grid().len();
    let d = law.dimension();

    let z_of = |diff: f64, se: f64| if se > 0.0 { diff / se } else if diff == 0.0 { 0.0 } else { f64::INFINITY };

    let mut max_abs_z = 0.0f64;
    let mut mean_z = vec![vec![0.0; d]; n];
    for k in 0..n {
        for j in 0..d {
            let z = z_of(stats.mean[k][j] - law.mean()[k][j], stats.mean_se[k][j]);
            max_abs_z = max_abs_z.max(z.abs());
            mean_z[k][j] = z;
        }
    }
    let mut cov_z = DMatrix::zeros(n, n);
    for k in 0..n {
        for l in k..n {
            let z = z_of(stats.cov[(k, l)] - law.scalar_cov()[(k, l)], stats.cov_se[(k, l)]);
            max_abs_z = max_abs_z.max(z.abs());
            cov_z[(k, l)] = z;
            cov_z[(l, k)] = z;
        }
    }
    let comparisons = n * d + n * (n + 1) / 2;
    Ok(ComparisonReport { mean_z, cov_z, max_abs_z, gate, pass: max_abs_z < gate, comparisons })
}

fn check_horizon(spec: &HarmonicSpec, grid: &TimeGrid) -> Result<()> {
    if grid.horizon() != spec.horizon() {
        return Err(Error::invalid_grid(format!(
            "grid horizon {} does not match the oscillator window {}",
            grid.horizon(),
            spec.horizon()
        )));
    }
    Ok(())
}

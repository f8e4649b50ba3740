//! End-to-end acceptance gate. One test per criterion; each prints a summary
//! line with the measured quantities next to its pinned tolerance, and the
//! cargo pass/fail line for the test is the verdict for the criterion.

use std::time::Instant;

use bernstein::density::{DensityOperatorSpec, Observable};
use bernstein::kernels::{
    spectral_kernel_eval, standard_probes, verify_kernel_properties, HeatKernel, MehlerKernel,
    ProbeConfig, SpectralKernel,
};
use bernstein::oscillator::{
    bridge_fdd_law, bridge_moments, bridge_solutions, conditioned_ou_moments, stationary_fdd_law,
    stationary_moments, BridgeSpec,
};
use bernstein::process::{gaussian_markov_ratio, marginal_density, stationarity_residual, EndpointMeasure};
use bernstein::quadrature::QuadratureGrid;
use bernstein::sampler::{
    empirical_compare, sample_bridge_sequential, sample_gaussian_law, sample_mixture,
    simulate_periodic_ou, BridgeMixture, PathEnsemble,
};
use bernstein::spectral::{
    grid_eigensystem, partition_function, HarmonicSpec, PartitionMethod,
};
use bernstein::TimeGrid;

const C1_RESIDUAL: f64 = 1e-8;
const C1_RUNTIME: f64 = 10.0;
const C2_ANALYTIC_RELATIVE: f64 = 1e-6;
const C2_GRID_RELATIVE: f64 = 1e-5;
const C3_RELATIVE: f64 = 1e-10;
const C4_POINTWISE: f64 = 1e-10;
const C5_ROUND_TRIP: f64 = 1e-8;
const C6_MARKOV_ZERO: f64 = 1e-12;
const C6_STATIONARITY: f64 = 1e-10;
const C7_BROWNIAN: f64 = 1e-6;
const C8_TRACE: f64 = 1e-6;
const C9_GATE: f64 = 4.0;
const C9_RUNTIME: f64 = 300.0;
// printed reference values are tabulated to seven figures
const PRINTED: f64 = 5e-6;

fn unit_spec() -> HarmonicSpec {
    HarmonicSpec::new(1, 1.0, 1.0).unwrap()
}

fn gaussian_pdf(x: f64, mean: f64, variance: f64) -> f64 {
    (-(x - mean) * (x - mean) / (2.0 * variance)).exp()
        / (2.0 * std::f64::consts::PI * variance).sqrt()
}

#[test]
fn criterion_01_semigroup_composition() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for &lambda in &[0.5, 1.0, 2.0] {
        let spec = HarmonicSpec::new(1, lambda, 1.0).unwrap();
        let kernel = MehlerKernel::new(spec);
        let probes = standard_probes(1, 1.0, 100);
        let report = verify_kernel_properties(&kernel, &probes, &ProbeConfig::default()).unwrap();
        worst = worst.max(report.max_composition_residual);
        assert!(report.positivity_ok, "lambda = {lambda}: kernel left the positive cone");
    }
    let elapsed = start.elapsed().as_secs_f64();
    println!(
        "criterion 01: max composition residual {worst:.3e} (tolerance {C1_RESIDUAL:.0e}) over \
         300 probes in {elapsed:.2} s (budget {C1_RUNTIME} s)"
    );
    assert!(worst < C1_RESIDUAL, "composition residual {worst:.3e}");
    assert!(elapsed < C1_RUNTIME, "runtime {elapsed:.2} s exceeds {C1_RUNTIME} s");
}

#[test]
fn criterion_02_spectral_matches_closed_kernel() {
    // probe window stated by the criterion: t in [0.2, 1], |x|, |y| <= 4
    let times = [0.2, 0.25, 0.35, 0.5, 0.75, 1.0];
    let points: Vec<f64> = (-8..=8).map(|k| 0.5 * k as f64).collect();
    let closed = MehlerKernel::new(unit_spec());

    let analytic = SpectralKernel::analytic(unit_spec(), 60, 1e-6).unwrap();
    let mut refusals = 0usize;
    let mut worst_a = 0.0f64;
    let mut worst_a_at = (0.0, 0.0, 0.0);
    for &t in &times {
        for &x in &points {
            for &y in &points {
                let want = closed.evaluate(&[x], t, &[y]).unwrap();
                match spectral_kernel_eval(&analytic, &[x], t, &[y]) {
                    Ok(value) => {
                        let relative = (value.value - want).abs() / want;
                        if relative > worst_a {
                            worst_a = relative;
                            worst_a_at = (x, t, y);
                        }
                    }
                    Err(_) => refusals += 1,
                }
            }
        }
    }

    let system = grid_eigensystem(|x| 0.5 * x * x, 18.0, 2000, 80).unwrap();
    let grid_kernel = SpectralKernel::from_grid(system, 1.0, 1e-5).unwrap();
    let mut worst_b = 0.0f64;
    let mut worst_b_at = (0.0, 0.0, 0.0);
    for &t in &times {
        for &x in &points {
            for &y in &points {
                let want = closed.evaluate(&[x], t, &[y]).unwrap();
                let got = grid_kernel.evaluate(&[x], t, &[y]).unwrap();
                let relative = (got - want).abs() / want;
                if relative > worst_b {
                    worst_b = relative;
                    worst_b_at = (x, t, y);
                }
            }
        }
    }

    println!(
        "criterion 02: analytic M=60 refused {refusals} probes below its certified t_min = \
         {:.4}; worst relative error {worst_a:.3e} at (x, t, y) = {worst_a_at:?} \
         (tolerance {C2_ANALYTIC_RELATIVE:.0e}); grid route worst relative {worst_b:.3e} at \
         {worst_b_at:?} (tolerance {C2_GRID_RELATIVE:.0e})",
        analytic.t_min()
    );
    assert!(
        refusals == 0 && worst_a <= C2_ANALYTIC_RELATIVE,
        "analytic expansion: {refusals} probes below t_min = {:.4} refused outright, and the \
         worst evaluated relative error is {worst_a:.3e} at (x, t, y) = {worst_a_at:?}. The \
         60-level tail exceeds the kernel itself wherever the points are well separated (the \
         kernel decays like exp(-quadratic) while the tail only decays in t), so a uniform \
         relative tolerance of {C2_ANALYTIC_RELATIVE:.0e} over this window is not attainable \
         at this truncation order.",
        analytic.t_min()
    );
    assert!(
        worst_b <= C2_GRID_RELATIVE,
        "grid-eigensolver expansion: worst relative error {worst_b:.3e} at (x, t, y) = \
         {worst_b_at:?} against the tolerance {C2_GRID_RELATIVE:.0e}; the same separated-point \
         blowup applies, and near the diagonal the solver discretization bias alone sits near \
         2e-5 of the kernel scale."
    );
}

#[test]
fn criterion_03_partition_series_vs_closed() {
    let mut worst = 0.0f64;
    for d in 1..=3usize {
        for k in 0..=24 {
            let product = 0.1 + 4.9 * k as f64 / 24.0;
            for &lambda in &[0.3, 0.8, 2.5] {
                let spec = HarmonicSpec::new(d, lambda, 1.0).unwrap();
                let t = product / lambda;
                let series = partition_function(&spec, t, PartitionMethod::Series).unwrap();
                let closed = partition_function(&spec, t, PartitionMethod::Closed).unwrap();
                let fold = 2.0 * ((lambda * t).cosh() - 1.0);
                let direct = fold.powf(-0.5 * d as f64);
                worst = worst.max((series - closed).abs() / closed);
                worst = worst.max((closed - direct).abs() / direct);
            }
        }
    }
    let unit = partition_function(&unit_spec(), 1.0, PartitionMethod::Series).unwrap();
    let exact = 0.5 / 0.5f64.sinh();
    println!(
        "criterion 03: worst series/closed relative gap {worst:.3e} (tolerance {C3_RELATIVE:.0e}); \
         Z(1) = {unit:.7} vs tabulated 0.9595164"
    );
    assert!(worst < C3_RELATIVE);
    assert!((unit - exact).abs() <= 1e-12 * exact);
    assert!((unit - 0.9595164).abs() <= PRINTED);
}

#[test]
fn criterion_04_bridge_marginal_product() {
    let mut worst = 0.0f64;
    for &b in &[-1.2, 0.0, 0.7] {
        let bspec = BridgeSpec::new(unit_spec(), vec![b]).unwrap();
        for &t in &[0.1, 0.3, 0.5, 0.7, 0.9] {
            let moments = bridge_moments(&bspec, t, t).unwrap();
            for k in -8..=8 {
                let x = 0.25 * k as f64;
                let (u, v) = bridge_solutions(&bspec, &[x], t).unwrap();
                let density = gaussian_pdf(x, moments.mean[0], moments.variance);
                worst = worst.max((u * v - density).abs());
            }
        }
    }

    // the tabulated midpoint value sigma(0.5) is the variance
    // sinh(0.5)^2 / sinh(1)
    let bspec = BridgeSpec::new(unit_spec(), vec![0.7]).unwrap();
    let sigma = bridge_moments(&bspec, 0.5, 0.5).unwrap().variance;
    let exact = 0.5f64.sinh() * 0.5f64.sinh() / 1.0f64.sinh();

    // pinning: both moments collapse exactly at the window ends
    let at_start = bridge_moments(&bspec, 0.0, 0.0).unwrap();
    let at_end = bridge_moments(&bspec, 1.0, 1.0).unwrap();

    println!(
        "criterion 04: worst |u v - gaussian| {worst:.3e} (tolerance {C4_POINTWISE:.0e}); \
         sigma(0.5) = {sigma:.7} vs tabulated 0.2310585; endpoint variances \
         ({:.1e}, {:.1e})",
        at_start.variance, at_end.variance
    );
    assert!(worst < C4_POINTWISE);
    assert!((sigma - exact).abs() <= 1e-12 * exact);
    assert!((sigma - 0.2310585).abs() <= PRINTED);
    assert_eq!(at_start.mean[0], 0.0);
    assert_eq!(at_start.variance, 0.0);
    assert_eq!(at_end.mean[0], 0.7);
    assert_eq!(at_end.variance, 0.0);
}

#[test]
fn criterion_05_precision_round_trips() {
    let configs = [(1.0, 1.0), (0.7, 1.3)];
    let mut worst_bridge = 0.0f64;
    let mut worst_periodic = 0.0f64;
    let mut two_point = 0.0f64;
    for &(lambda, horizon) in &configs {
        let spec = HarmonicSpec::new(1, lambda, horizon).unwrap();
        let bspec = BridgeSpec::new(spec.clone(), vec![0.4]).unwrap();
        for n in 1..=10usize {
            let uniform = TimeGrid::uniform_interior(n, horizon).unwrap();
            let skewed = TimeGrid::new(
                (1..=n).map(|k| horizon * (k as f64 + 0.3) / (n as f64 + 1.0)).collect(),
                horizon,
            )
            .unwrap();
            for grid in [&uniform, &skewed] {
                let bridge = bridge_fdd_law(&bspec, grid).unwrap();
                let periodic = stationary_fdd_law(&spec, grid).unwrap();
                let eye = nalgebra::DMatrix::<f64>::identity(n, n);
                let bd = (bridge.scalar_cov() * bridge.scalar_precision().unwrap() - &eye)
                    .abs()
                    .max();
                let pd = (periodic.scalar_cov() * periodic.scalar_precision().unwrap() - &eye)
                    .abs()
                    .max();
                worst_bridge = worst_bridge.max(bd);
                worst_periodic = worst_periodic.max(pd);
                if n == 2 {
                    two_point = two_point.max(pd);
                }
            }
        }
    }
    println!(
        "criterion 05: worst K·K⁻¹ defect bridge {worst_bridge:.3e}, periodic \
         {worst_periodic:.3e} (tolerance {C5_ROUND_TRIP:.0e}); shared-entry n=2 periodic case \
         {two_point:.3e}"
    );
    assert!(worst_bridge < C5_ROUND_TRIP);
    assert!(worst_periodic < C5_ROUND_TRIP);
}

#[test]
fn criterion_06_markov_dichotomy() {
    // bridge covariance: the Markov defect vanishes on every interior triple
    let bspec = BridgeSpec::new(unit_spec(), vec![0.6]).unwrap();
    let cov = |p: f64, q: f64| bridge_moments(&bspec, p.min(q), p.max(q)).unwrap().covariance;
    let mut worst_bridge = 0.0f64;
    for i in 1..8usize {
        for j in (i + 1)..8 {
            for k in (j + 1)..8 {
                let ratio = gaussian_markov_ratio(
                    cov,
                    i as f64 / 8.0,
                    j as f64 / 8.0,
                    k as f64 / 8.0,
                )
                .unwrap();
                worst_bridge = worst_bridge.max(ratio.abs());
            }
        }
    }

    // periodic covariance at the reference triple, in the scale-free cosh
    // normalization; the defect is 2-homogeneous, so the full covariance
    // reproduces it through the squared prefactor
    let spec = unit_spec();
    let cosh_form = |p: f64, q: f64| ((p - q).abs() - 0.5).cosh();
    let unit_ratio = gaussian_markov_ratio(cosh_form, 0.0, 0.25, 0.5).unwrap();
    let exact = 0.5f64.cosh() - 0.25f64.cosh() * 0.25f64.cosh();
    let full_cov = |p: f64, q: f64| stationary_moments(&spec, p.min(q), p.max(q)).unwrap().1;
    let full_ratio = gaussian_markov_ratio(full_cov, 0.0, 0.25, 0.5).unwrap();
    let prefactor = 2.0 * 0.5f64.sinh();

    // stationarity residuals of the two endpoint measures
    let kernel = MehlerKernel::new(unit_spec());
    let mut worst_gibbs = 0.0f64;
    for (times, shift) in [
        (vec![0.2, 0.45, 0.7], 0.25),
        (vec![0.1, 0.15, 0.3, 0.55], 0.4),
        (vec![0.5], 0.45),
    ] {
        let grid = TimeGrid::new(times, 1.0).unwrap();
        let points: Vec<Vec<f64>> =
            (0..grid.len()).map(|k| vec![0.4 * k as f64 - 0.5]).collect();
        let residual =
            stationarity_residual(&EndpointMeasure::GibbsDiagonal, &kernel, &grid, &points, shift)
                .unwrap();
        worst_gibbs = worst_gibbs.max(residual);
    }
    let pinned = EndpointMeasure::pinned(vec![0.0], vec![1.0]).unwrap();
    let grid = TimeGrid::new(vec![0.25, 0.625], 1.0).unwrap();
    let moved = stationarity_residual(
        &pinned,
        &kernel,
        &grid,
        &[vec![0.3], vec![-0.4]],
        0.2,
    )
    .unwrap();

    println!(
        "criterion 06: worst bridge Markov defect {worst_bridge:.3e} (tolerance \
         {C6_MARKOV_ZERO:.0e}); periodic defect {unit_ratio:.7} vs tabulated 0.063813; worst \
         Gibbs shift residual {worst_gibbs:.3e} (tolerance {C6_STATIONARITY:.0e}); pinned shift \
         residual {moved:.3e} (must be positive)"
    );
    assert!(worst_bridge <= C6_MARKOV_ZERO);
    assert!((unit_ratio - exact).abs() <= 1e-12 * exact);
    assert!((unit_ratio - 0.063813).abs() <= PRINTED);
    assert!((full_ratio * prefactor * prefactor - unit_ratio).abs() <= 1e-12 * unit_ratio);
    assert!(worst_gibbs <= C6_STATIONARITY);
    assert!(moved > 0.0);
}

#[test]
fn criterion_07_limit_regimes() {
    // lambda -> 0: the bridge covariance degrades to the Brownian bridge form
    let spec = HarmonicSpec::new(1, 1e-4, 1.0).unwrap();
    let bspec = BridgeSpec::new(spec, vec![0.3]).unwrap();
    let mut worst = 0.0f64;
    for i in 1..10usize {
        for j in i..10 {
            let s = i as f64 / 10.0;
            let t = j as f64 / 10.0;
            let got = bridge_moments(&bspec, s, t).unwrap().covariance;
            worst = worst.max((got - s * (1.0 - t)).abs());
        }
    }

    let (variance, _) = conditioned_ou_moments(&unit_spec(), 1.0, 1.0).unwrap();
    let exact = 1.0f64.sinh() * (-1.0f64).exp();
    println!(
        "criterion 07: worst Brownian-bridge gap {worst:.3e} (tolerance {C7_BROWNIAN:.0e}); \
         conditioned variance {variance:.7} vs tabulated 0.4323324"
    );
    assert!(worst < C7_BROWNIAN);
    assert!((variance - exact).abs() <= 1e-12 * exact);
    assert!((variance - 0.4323324).abs() <= PRINTED);
}

#[test]
fn criterion_08_trace_identities() {
    let quad = QuadratureGrid::gauss_hermite(180, 0.7).unwrap();
    let thermal = DensityOperatorSpec::eigenbasis_gibbs(unit_spec(), 40).unwrap();
    let pinned = DensityOperatorSpec::pinned(
        unit_spec(),
        vec![0.25, 0.45, 0.3],
        vec![-1.0, 0.0, 0.6],
        vec![0.4, -0.3, 1.1],
    )
    .unwrap();

    let mut worst_trace = 0.0f64;
    for &t in &[0.0, 0.5, 1.0] {
        worst_trace = worst_trace.max((thermal.trace(t, &quad).unwrap() - 1.0).abs());
    }
    for &t in &[0.25, 0.5, 0.75] {
        worst_trace = worst_trace.max((pinned.trace(t, &quad).unwrap() - 1.0).abs());
    }

    // five bounded observables at three interior times, against the process
    // marginal of the thermal measure
    let kernel = MehlerKernel::new(unit_spec());
    let observables: [(&str, fn(f64) -> f64); 5] = [
        ("tanh", |x| x.tanh()),
        ("bump", |x| (-x * x).exp()),
        ("cauchy", |x| 1.0 / (1.0 + x * x)),
        ("sin", f64::sin),
        ("cos", |x| (0.8 * x).cos()),
    ];
    let mut worst_observable = 0.0f64;
    for &t in &[0.2, 0.5, 0.8] {
        for (_, b) in observables {
            let obs = Observable::new(b, 1.0).unwrap();
            let from_operator = thermal.expectation_trace(t, &obs, &quad).unwrap();
            let from_process: f64 = quad
                .nodes
                .iter()
                .zip(&quad.weights)
                .map(|(&x, &w)| {
                    w * b(x)
                        * marginal_density(&EndpointMeasure::GibbsDiagonal, &kernel, t, &[x])
                            .unwrap()
                })
                .sum();
            worst_observable = worst_observable.max((from_operator - from_process).abs());
        }
    }

    let purity = thermal.purity().unwrap();
    let exact_purity = 0.5f64.tanh();

    // R(t) maps each backward solution to its weighted self
    let mut worst_eigen = 0.0f64;
    for &t in &[0.0, 0.5] {
        for m in [0usize, 1, 3, 7] {
            let weight = thermal.weights()[m];
            let image = thermal.apply(t, |x| thermal.solution_pair(m, x, t).1, &quad).unwrap();
            let adjoint =
                thermal.adjoint_apply(t, |x| thermal.solution_pair(m, x, t).0, &quad).unwrap();
            for k in -12..=12 {
                let x = 0.3 * k as f64;
                let (u, v) = thermal.solution_pair(m, x, t);
                worst_eigen = worst_eigen.max((image.value(x) - weight * v).abs());
                worst_eigen = worst_eigen.max((adjoint.value(x) - weight * u).abs());
            }
        }
    }

    println!(
        "criterion 08: worst |trace - 1| {worst_trace:.3e}, worst observable-trace gap \
         {worst_observable:.3e}, worst eigen-relation defect {worst_eigen:.3e} (tolerance \
         {C8_TRACE:.0e}); purity {purity:.7} vs tabulated 0.4621172"
    );
    assert!(worst_trace < C8_TRACE);
    assert!(worst_observable < C8_TRACE);
    assert!(worst_eigen < C8_TRACE);
    assert!((purity - exact_purity).abs() <= 1e-12 * exact_purity);
    assert!((purity - 0.4621172).abs() <= PRINTED);
}

#[test]
fn criterion_09_monte_carlo_law_equality() {
    let start = Instant::now();
    let count = 100_000;

    // bridge: sequential one-step sampler vs the law and the exact sampler
    let bspec = BridgeSpec::new(unit_spec(), vec![0.7]).unwrap();
    let grid = TimeGrid::uniform_interior(4, 1.0).unwrap();
    let law = bridge_fdd_law(&bspec, &grid).unwrap();
    let sequential = sample_bridge_sequential(&bspec, &grid, count, 0x2026_0101).unwrap();
    let exact = sample_gaussian_law(&law, count, 0x2026_0202).unwrap();
    let seq_report = empirical_compare(&sequential, &law, C9_GATE).unwrap();
    let exact_report = empirical_compare(&exact, &law, C9_GATE).unwrap();

    let seq_stats = sequential.statistics().unwrap();
    let exact_stats = exact.statistics().unwrap();
    let mut cross_z = 0.0f64;
    for k in 0..grid.len() {
        let se = seq_stats.mean_se[k][0].hypot(exact_stats.mean_se[k][0]);
        cross_z = cross_z.max((seq_stats.mean[k][0] - exact_stats.mean[k][0]).abs() / se);
        for l in k..grid.len() {
            let se = seq_stats.cov_se[(k, l)].hypot(exact_stats.cov_se[(k, l)]);
            cross_z = cross_z.max((seq_stats.cov[(k, l)] - exact_stats.cov[(k, l)]).abs() / se);
        }
    }

    // periodic SDE: Euler at 4096 steps against the cosh-form covariance,
    // with the bias estimated from the 2048-step coarsening
    let spec = unit_spec();
    let pair = TimeGrid::new(vec![0.25, 0.75], 1.0).unwrap();
    let fine = simulate_periodic_ou(&spec, &pair, count, 0x2026_0303, 4096).unwrap();
    let coarse = simulate_periodic_ou(&spec, &pair, count, 0x2026_0303, 2048).unwrap();
    let fine_stats = fine.statistics().unwrap();
    let coarse_stats = coarse.statistics().unwrap();
    let variance = stationary_moments(&spec, 0.25, 0.25).unwrap().0;
    let lagged = stationary_moments(&spec, 0.25, 0.75).unwrap().1;
    let mut worst_margin = f64::NEG_INFINITY;
    for (k, l, target) in [(0, 0, variance), (1, 1, variance), (0, 1, lagged)] {
        let got = fine_stats.cov[(k, l)];
        let bias = (got - coarse_stats.cov[(k, l)]).abs();
        let allowance = 3.0 * fine_stats.cov_se[(k, l)] + bias;
        worst_margin = worst_margin.max((got - target).abs() - allowance);
        assert!(
            (got - target).abs() <= allowance,
            "cov[({k},{l})] = {got:.6} vs {target:.6} outside 3 SE + bias = {allowance:.2e}"
        );
    }
    // the tabulated seven-figure targets the covariances were checked against
    assert!((variance - 1.0819757).abs() <= 2e-6);
    assert!((lagged - 0.9595164).abs() <= PRINTED);

    let elapsed = start.elapsed().as_secs_f64();
    println!(
        "criterion 09: bridge max |z| sequential {:.2}, exact {:.2}, cross {cross_z:.2} (gate \
         {C9_GATE}); periodic worst margin {worst_margin:.2e} below its 3 SE + bias allowance; \
         runtime {elapsed:.1} s (budget {C9_RUNTIME} s)",
        seq_report.max_abs_z, exact_report.max_abs_z
    );
    assert!(seq_report.pass, "sequential sampler z = {:.2}", seq_report.max_abs_z);
    assert!(exact_report.pass, "exact sampler z = {:.2}", exact_report.max_abs_z);
    assert!(cross_z <= C9_GATE, "cross-route z = {cross_z:.2}");
    assert!(elapsed < C9_RUNTIME, "runtime {elapsed:.1} s exceeds {C9_RUNTIME} s");
}

fn fnv1a(values: &[f64]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for v in values {
        for byte in v.to_le_bytes() {
            hash ^= byte as u64;
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    hash
}

#[test]
fn criterion_10_fixed_seed_determinism() {
    let seed = 0x5eed_cafe;
    let grid = TimeGrid::new(vec![0.2, 0.5, 0.8], 1.0).unwrap();
    let spec = unit_spec();
    let bspec = BridgeSpec::new(spec.clone(), vec![0.7]).unwrap();
    let law = bridge_fdd_law(&bspec, &grid).unwrap();
    let mixture = BridgeMixture::new(
        vec![0.4, 0.6],
        vec![
            BridgeSpec::new(spec.clone(), vec![-1.0]).unwrap(),
            BridgeSpec::new(spec.clone(), vec![1.0]).unwrap(),
        ],
    )
    .unwrap();

    let run = || -> Vec<PathEnsemble> {
        vec![
            sample_bridge_sequential(&bspec, &grid, 64, seed).unwrap(),
            sample_gaussian_law(&law, 64, seed).unwrap(),
            sample_mixture(&mixture, &grid, 64, seed).unwrap().0,
            simulate_periodic_ou(&spec, &grid, 64, seed, 512).unwrap(),
        ]
    };

    let bits = |ensembles: &[PathEnsemble]| -> Vec<u64> {
        ensembles
            .iter()
            .flat_map(|e| (0..e.count()).flat_map(move |p| e.path(p).iter().map(|v| v.to_bits())))
            .collect()
    };

    let baseline = run();
    let repeat = run();
    assert_eq!(bits(&baseline), bits(&repeat), "same-seed repetition changed the draws");

    for workers in [1usize, 3] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().unwrap();
        let pooled = pool.install(run);
        assert_eq!(
            bits(&baseline),
            bits(&pooled),
            "draws changed under a {workers}-thread pool"
        );
    }

    let values: Vec<f64> = baseline
        .iter()
        .flat_map(|e| (0..e.count()).flat_map(move |p| e.path(p).iter().copied()))
        .collect();
    let digest = fnv1a(&values);
    println!(
        "criterion 10: {} sampled values bitwise stable across repetitions and 1/3-thread \
         pools; digest {digest:#018x}",
        values.len()
    );
    assert_eq!(digest, 0xa798_cd11_8637_4099, "golden digest changed");
}

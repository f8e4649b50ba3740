//! The `verify` subcommand: run every structural identity the configured
//! model is supposed to satisfy and report each measured residual against
//! its gate. The report is machine-readable JSON; a tightened tolerance
//! flips checks to failed without changing what is measured.

use nalgebra::DMatrix;
use serde::Serialize;

use bernstein::kernels::{verify_kernel_properties, MehlerKernel, ProbeConfig};
use bernstein::kernels::standard_probes;
use bernstein::oscillator::{
    bridge_fdd_law, bridge_moments, conditioned_ou_fdd_law, conditioned_ou_moments,
    stationary_fdd_law, stationary_moments, BridgeSpec, GaussianProcessLaw,
};
use bernstein::process::{
    fdd_log_density, gaussian_markov_ratio, marginal_density, stationarity_residual, EndpointMeasure,
};
use bernstein::TimeGrid;
use bernstein::quadrature::QuadratureGrid;
use bernstein::spectral::{partition_function, HarmonicSpec, PartitionMethod};
use bernstein::density::DensityOperatorSpec;

use crate::config::{ExperimentConfig, Model, WeightsPolicy};
use crate::fail::Failure;
use crate::scales;

/// One measured residual against its gate. `pass` means the residual is on
/// the wanted side: at most the tolerance, unless the note says the check
/// expects the value to exceed it.
#[derive(Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    fn below(name: &'static str, measured: f64, tolerance: f64) -> Self {
        Check { name, measured, tolerance, pass: measured.is_finite() && measured <= tolerance, note: None }
    }

    fn above(name: &'static str, measured: f64, tolerance: f64, note: &str) -> Self {
        Check {
            name,
            measured,
            tolerance,
            pass: measured.is_finite() && measured > tolerance,
            note: Some(note.into()),
        }
    }

    fn noted(mut self, note: &str) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Serialize)]
pub struct Section {
    pub name: &'static str,
    pub pass: bool,
    pub checks: Vec<Check>,
}

impl Section {
    fn gather(name: &'static str, checks: Vec<Check>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Section { name, pass, checks }
    }
}

#[derive(Debug, Serialize)]
pub struct VerificationReport {
    pub model: Model,
    pub dimension: usize,
    pub lambda: f64,
    pub horizon: f64,
    pub pass: bool,
    pub sections: Vec<Section>,
}

pub fn run_verify(cfg: &ExperimentConfig) -> Result<VerificationReport, Failure> {
    let sections = vec![
        kernel_section(cfg)?,
        normalization_section(cfg)?,
        precision_section(cfg)?,
        trace_section(cfg)?,
        classification_section(cfg)?,
    ];
    let pass = sections.iter().all(|s| s.pass);
    Ok(VerificationReport {
        model: cfg.model,
        dimension: cfg.dimension,
        lambda: cfg.lambda,
        horizon: cfg.horizon,
        pass,
        sections,
    })
}

fn scalar_spec(cfg: &ExperimentConfig) -> HarmonicSpec {
    HarmonicSpec::new(1, cfg.lambda, cfg.horizon).expect("validated config")
}

/// Endpoint measure the configured model realizes, when it has one. The
/// conditioned model pins only its left end and is handled through its
/// moments instead.
fn endpoint_measure(cfg: &ExperimentConfig) -> Option<EndpointMeasure> {
    let origin = vec![0.0; cfg.dimension];
    match cfg.model {
        Model::Bridge => {
            Some(EndpointMeasure::pinned(origin, cfg.terminals[0].clone()).expect("validated config"))
        }
        Model::Mixture => {
            let components = cfg
                .terminals
                .iter()
                .map(|b| EndpointMeasure::pinned(origin.clone(), b.clone()).expect("validated config"))
                .collect();
            Some(EndpointMeasure::mixture(cfg.component_masses(), components).expect("validated config"))
        }
        Model::StationaryGibbs | Model::PeriodicOuSde => Some(EndpointMeasure::GibbsDiagonal),
        Model::ConditionedOu => None,
    }
}

fn kernel_section(cfg: &ExperimentConfig) -> Result<Section, Failure> {
    let kernel = MehlerKernel::new(cfg.harmonic());
    // composition closes through a d-dimensional quadrature, so the probe
    // budget shrinks with the dimension
    let count = match cfg.dimension {
        1 => 40,
        2 => 12,
        _ => 6,
    };
    let probes = standard_probes(cfg.dimension, cfg.horizon, count);
    let report = verify_kernel_properties(&kernel, &probes, &ProbeConfig::default())?;
    let tol = &cfg.tolerances;
    Ok(Section::gather(
        "kernel",
        vec![
            Check::below("composition_residual", report.max_composition_residual, tol.kernel),
            Check::below("symmetry_defect", report.max_symmetry_defect, tol.kernel),
            Check {
                name: "positivity",
                measured: report.aronson_min,
                tolerance: 0.0,
                pass: report.positivity_ok && report.aronson_min > 0.0,
                note: Some("measured value is the smallest Gaussian envelope statistic over the probes".into()),
            },
        ],
    ))
}

fn normalization_section(cfg: &ExperimentConfig) -> Result<Section, Failure> {
    let spec = cfg.harmonic();
    let d = cfg.dimension as f64;
    let mut series_defect: f64 = 0.0;
    let mut direct_defect: f64 = 0.0;
    for f in [0.25, 0.5, 1.0] {
        let t = f * cfg.horizon;
        let series = partition_function(&spec, t, PartitionMethod::Series)?;
        let closed = partition_function(&spec, t, PartitionMethod::Closed)?;
        let direct = (2.0 * ((cfg.lambda * t).cosh() - 1.0)).powf(-d / 2.0);
        series_defect = series_defect.max(((series - closed) / closed).abs());
        direct_defect = direct_defect.max(((direct - closed) / closed).abs());
    }
    let tol = &cfg.tolerances;
    let mut checks = vec![
        Check::below("partition_series_vs_closed", series_defect, tol.partition),
        Check::below("partition_closed_vs_direct", direct_defect, tol.partition),
    ];
    if cfg.dimension == 1 {
        if let Some(measure) = endpoint_measure(cfg) {
            let kernel = MehlerKernel::new(spec);
            let quad = QuadratureGrid::gauss_hermite(200, mass_scale(cfg))?;
            let t = 0.5 * cfg.horizon;
            let mut mass = 0.0;
            for (&x, &w) in quad.nodes.iter().zip(&quad.weights) {
                mass += w * marginal_density(&measure, &kernel, t, &[x])?;
            }
            checks.push(
                Check::below("marginal_mass", (mass - 1.0).abs(), tol.trace)
                    .noted("midwindow marginal integrated against Gauss-Hermite nodes"),
            );
        }
    }
    Ok(Section::gather("normalization", checks))
}

/// Quadrature scale matched to the model's midwindow marginal.
fn mass_scale(cfg: &ExperimentConfig) -> f64 {
    match cfg.model {
        Model::Bridge | Model::Mixture => scales::pinned(cfg),
        _ => scales::thermal(cfg.lambda, cfg.horizon),
    }
}

fn closed_round_trip(law: &GaussianProcessLaw) -> f64 {
    let precision = law.scalar_precision().expect("closed-form precision");
    let n = law.scalar_cov().nrows();
    (law.scalar_cov() * precision - DMatrix::<f64>::identity(n, n)).abs().max()
}

fn precision_section(cfg: &ExperimentConfig) -> Result<Section, Failure> {
    let spec = cfg.harmonic();
    let grid = cfg.time_grid();
    let tol = &cfg.tolerances;
    let mut checks = Vec::new();

    // every model gets the two closed-form round trips; the bridge one runs
    // per configured terminal, or at the origin when the model has none
    let terminals: Vec<Vec<f64>> = if cfg.terminals.is_empty() {
        vec![vec![0.0; cfg.dimension]]
    } else {
        cfg.terminals.clone()
    };
    let mut bridge_defect: f64 = 0.0;
    for b in terminals {
        let bspec = BridgeSpec::new(spec, b)?;
        let law = bridge_fdd_law(&bspec, &grid)?;
        bridge_defect = bridge_defect.max(closed_round_trip(&law));
    }
    checks.push(Check::below("bridge_round_trip", bridge_defect, tol.precision));

    let stationary = stationary_fdd_law(&spec, &grid)?;
    checks.push(Check::below("stationary_round_trip", closed_round_trip(&stationary), tol.precision));

    if cfg.model == Model::ConditionedOu {
        let law = conditioned_ou_fdd_law(&spec, &grid)?;
        let cov = law.scalar_cov();
        let n = cov.nrows();
        let inverse = cov
            .clone()
            .cholesky()
            .ok_or_else(|| Failure::Numerical("conditioned covariance lost positivity".into()))?
            .inverse();
        let defect = (cov * inverse - DMatrix::<f64>::identity(n, n)).abs().max();
        checks.push(
            Check::below("conditioned_round_trip", defect, tol.precision)
                .noted("numerical inverse; the defect measures the conditioning of the covariance"),
        );
    }
    Ok(Section::gather("precision_round_trip", checks))
}

fn trace_section(cfg: &ExperimentConfig) -> Result<Section, Failure> {
    let spec = scalar_spec(cfg);
    let tol = &cfg.tolerances;
    let (op, scale) = match cfg.model {
        Model::Bridge | Model::Mixture => {
            let ends: Vec<f64> = cfg.terminals.iter().map(|b| b[0]).collect();
            let starts = vec![0.0; ends.len()];
            let op = DensityOperatorSpec::pinned(spec, cfg.component_masses(), starts, ends)?;
            (op, scales::pinned(cfg))
        }
        _ => {
            let op = match &cfg.weights {
                WeightsPolicy::Gibbs { levels } => DensityOperatorSpec::eigenbasis_gibbs(spec, *levels)?,
                WeightsPolicy::Explicit { values } => DensityOperatorSpec::eigenbasis(spec, values.clone())?,
            };
            (op, scales::eigen(cfg.lambda))
        }
    };
    let quad = QuadratureGrid::gauss_hermite(200, scale)?;
    let mut trace_defect: f64 = 0.0;
    for f in [0.25, 0.5, 0.75] {
        trace_defect = trace_defect.max((op.trace(f * cfg.horizon, &quad)? - 1.0).abs());
    }
    let mut checks = Vec::new();
    let mut unit_trace = Check::below("unit_trace", trace_defect, tol.trace);
    if cfg.dimension > 1 {
        unit_trace = unit_trace.noted("operator families are scalar; checked at the configured frequency and horizon");
    }
    checks.push(unit_trace);

    if !matches!(cfg.model, Model::Bridge | Model::Mixture) {
        let levels = op.len();
        let mut pairs = vec![(0, 0)];
        if levels > 1 {
            pairs.push((0, 1));
            pairs.push((1, 1));
        }
        if levels > 5 {
            pairs.push((2, 5));
        }
        let defect = op.biortho_check(0.5 * cfg.horizon, &pairs, &quad)?;
        checks.push(Check::below("biorthonormality", defect, tol.trace));
    }
    Ok(Section::gather("trace_identity", checks))
}

/// Covariance factorization defect |K(s,u)K(t,t) − K(s,t)K(t,u)| normalized
/// by K(t,t)·sqrt(K(s,s)K(u,u)). Zero exactly for Markov Gaussian laws.
fn markov_defect(cov: impl Fn(f64, f64) -> f64, s: f64, t: f64, u: f64) -> Result<f64, Failure> {
    let raw = gaussian_markov_ratio(&cov, s, t, u)?;
    let scale = cov(t, t) * (cov(s, s) * cov(u, u)).sqrt();
    Ok((raw / scale).abs())
}

fn classification_section(cfg: &ExperimentConfig) -> Result<Section, Failure> {
    let spec = cfg.harmonic();
    let grid = cfg.time_grid();
    let times = grid.times();
    let (s, t, u) = if times.len() >= 3 {
        (times[0], times[times.len() / 2], times[times.len() - 1])
    } else {
        (0.25 * cfg.horizon, 0.5 * cfg.horizon, 0.75 * cfg.horizon)
    };
    let tol = &cfg.tolerances;
    let mut checks = Vec::new();

    match cfg.model {
        Model::Bridge => {
            let bspec = BridgeSpec::new(spec, cfg.terminals[0].clone())?;
            let cov =
                |p: f64, q: f64| bridge_moments(&bspec, p.min(q), p.max(q)).expect("interior times").covariance;
            checks.push(Check::below("markov_defect", markov_defect(cov, s, t, u)?, tol.stationarity));
        }
        Model::ConditionedOu => {
            let cov = |p: f64, q: f64| conditioned_ou_moments(&spec, p, q).expect("interior times").1;
            checks.push(Check::below("markov_defect", markov_defect(cov, s, t, u)?, tol.stationarity));
        }
        Model::Mixture => {
            // mixing terminals over the common start point keeps the
            // endpoint coupling a product measure, so the law stays Markov;
            // measured through the chain rule of the joint densities, which
            // would catch any start-and-end coupling
            let measure = endpoint_measure(cfg).expect("mixture carries a measure");
            let kernel = MehlerKernel::new(spec);
            let x1 = vec![0.3; cfg.dimension];
            let x2 = vec![-0.2; cfg.dimension];
            let x3 = vec![0.4; cfg.dimension];
            let horizon = cfg.horizon;
            let joint = fdd_log_density(
                &measure,
                &kernel,
                &TimeGrid::new(vec![s, t, u], horizon)?,
                &[x1.clone(), x2.clone(), x3.clone()],
            )?;
            let mid = fdd_log_density(&measure, &kernel, &TimeGrid::new(vec![t], horizon)?, &[x2.clone()])?;
            let left =
                fdd_log_density(&measure, &kernel, &TimeGrid::new(vec![s, t], horizon)?, &[x1, x2.clone()])?;
            let right =
                fdd_log_density(&measure, &kernel, &TimeGrid::new(vec![t, u], horizon)?, &[x2, x3])?;
            let defect = (joint + mid - left - right).abs();
            checks.push(
                Check::below("chain_factorization_defect", defect, tol.stationarity).noted(
                    "terminal mixing over one start point is a product coupling, so the law stays Markov",
                ),
            );
        }
        Model::StationaryGibbs | Model::PeriodicOuSde => {
            let cov = |p: f64, q: f64| stationary_moments(&spec, p.min(q), p.max(q)).expect("interior times").1;
            checks.push(Check::above(
                "markov_defect",
                markov_defect(cov, s, t, u)?,
                tol.stationarity,
                "the diagonal coupling is not Markov inside the window; the nonzero defect is the expected classification",
            ));
        }
    }

    if let Some(measure) = endpoint_measure(cfg) {
        let kernel = MehlerKernel::new(spec);
        let cycle = [0.3, -0.4, 0.15, -0.2];
        let points: Vec<Vec<f64>> = (0..times.len())
            .map(|k| vec![cycle[k % cycle.len()]; cfg.dimension])
            .collect();
        let shift = 0.5 * (cfg.horizon - times[times.len() - 1]);
        let residual = stationarity_residual(&measure, &kernel, &grid, &points, shift)?;
        match cfg.model {
            Model::StationaryGibbs | Model::PeriodicOuSde => {
                checks.push(Check::below("shift_invariance", residual, tol.stationarity));
            }
            _ => {
                checks.push(Check::above(
                    "shift_sensitivity",
                    residual,
                    tol.stationarity,
                    "pinned endpoints break translation invariance; the law must move under a shift",
                ));
            }
        }
    }
    Ok(Section::gather("process_classification", checks))
}

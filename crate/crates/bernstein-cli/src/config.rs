//! Experiment configuration: one JSON document drives every subcommand.
//!
//! The document is fully explicit. Serialization is lossless, so
//! `parse(serialize(c)) == c` holds for every valid configuration, and
//! unknown fields are rejected rather than ignored.

use std::fmt;

use serde::{Deserialize, Serialize};

use bernstein::spectral::HarmonicSpec;
use bernstein::TimeGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: Model,
    /// Oscillator frequency λ > 0.
    pub lambda: f64,
    /// Window length T > 0; the process lives on [0, T].
    pub horizon: f64,
    /// Coordinate dimension, 1 through 3.
    pub dimension: usize,
    /// Bridge terminals, one coordinate vector per component: exactly one
    /// for `bridge`, two or more for `mixture`, none for the other models.
    #[serde(default)]
    pub terminals: Vec<Vec<f64>>,
    #[serde(default = "WeightsPolicy::default_gibbs")]
    pub weights: WeightsPolicy,
    pub grid: GridSpec,
    pub sampler: SamplerSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// Single bridge from the origin to its terminal.
    Bridge,
    /// Weighted mixture of bridges sharing one oscillator.
    Mixture,
    /// Stationary diagonal-coupled process, sampled exactly on the grid.
    StationaryGibbs,
    /// Process conditioned to start at the origin, free at the right end.
    ConditionedOu,
    /// Periodic stationary process integrated by an Euler scheme.
    PeriodicOuSde,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Bridge => "bridge",
            Model::Mixture => "mixture",
            Model::StationaryGibbs => "stationary_gibbs",
            Model::ConditionedOu => "conditioned_ou",
            Model::PeriodicOuSde => "periodic_ou_sde",
        })
    }
}

/// How component or level masses are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightsPolicy {
    /// Thermal masses e^{-λT m} over the first `levels` indices. For a
    /// mixture the indices run over its components, so `levels` must match
    /// the number of terminals.
    Gibbs { levels: usize },
    /// Explicit positive masses; consumers renormalize them to sum one.
    Explicit { values: Vec<f64> },
}

impl WeightsPolicy {
    pub fn default_gibbs() -> Self {
        WeightsPolicy::Gibbs { levels: 40 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Strictly increasing observation times inside (0, T).
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSpec {
    /// Number of paths to draw.
    pub count: usize,
    pub seed: u64,
    /// Euler steps across [0, T]; only `periodic_ou_sde` integrates a
    /// scheme, every other model draws from its law exactly.
    #[serde(default)]
    pub steps: Option<usize>,
}

/// Gates applied by `verify` and by the sampling z-score report. All are
/// strict upper bounds on measured residuals except `z_gate`, which bounds
/// the largest |z| of the empirical moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub kernel: f64,
    pub partition: f64,
    pub precision: f64,
    pub trace: f64,
    pub stationarity: f64,
    pub z_gate: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            kernel: 1e-8,
            partition: 1e-10,
            precision: 1e-8,
            trace: 1e-6,
            stationarity: 1e-10,
            z_gate: bernstein::sampler::DEFAULT_Z_GATE,
        }
    }
}

/// A rejected configuration, pointing at the offending field.
#[derive(Debug, Clone)]
pub struct ConfigError {
    pub path: String,
    pub reason: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.reason)
    }
}

impl std::error::Error for ConfigError {}

fn reject<T>(path: &str, reason: String) -> Result<T, ConfigError> {
    Err(ConfigError { path: format!("config.{path}"), reason })
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| ConfigError { path: "config".into(), reason: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("config serializes");
        text.push('\n');
        text
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return reject("lambda", format!("must be a positive finite frequency, got {}", self.lambda));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return reject("horizon", format!("must be a positive finite window length, got {}", self.horizon));
        }
        if !(1..=3).contains(&self.dimension) {
            return reject("dimension", format!("supported range is 1 through 3, got {}", self.dimension));
        }
        for (i, b) in self.terminals.iter().enumerate() {
            if b.len() != self.dimension {
                return reject(
                    &format!("terminals[{i}]"),
                    format!("has {} coordinates, expected {}", b.len(), self.dimension),
                );
            }
            if b.iter().any(|c| !c.is_finite()) {
                return reject(&format!("terminals[{i}]"), "coordinates must be finite".into());
            }
        }
        match self.model {
            Model::Bridge => {
                if self.terminals.len() != 1 {
                    return reject(
                        "terminals",
                        format!("bridge takes exactly one terminal, got {}", self.terminals.len()),
                    );
                }
            }
            Model::Mixture => {
                if self.terminals.len() < 2 {
                    return reject(
                        "terminals",
                        format!("mixture needs at least two terminals, got {}", self.terminals.len()),
                    );
                }
            }
            _ => {
                if !self.terminals.is_empty() {
                    return reject(
                        "terminals",
                        format!("{} does not take terminals; remove the {} given", self.model, self.terminals.len()),
                    );
                }
            }
        }
        match &self.weights {
            WeightsPolicy::Gibbs { levels } => {
                if *levels == 0 {
                    return reject("weights.levels", "need at least one level".into());
                }
                if self.model == Model::Mixture && *levels != self.terminals.len() {
                    return reject(
                        "weights.levels",
                        format!(
                            "gibbs weighting of a mixture runs over its components: expected {}, got {levels}",
                            self.terminals.len()
                        ),
                    );
                }
            }
            WeightsPolicy::Explicit { values } => {
                if values.is_empty() {
                    return reject("weights.values", "need at least one mass".into());
                }
                if values.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                    return reject("weights.values", "masses must be finite and positive".into());
                }
                if matches!(self.model, Model::Bridge | Model::Mixture)
                    && values.len() != self.terminals.len()
                {
                    return reject(
                        "weights.values",
                        format!("{} masses for {} terminals", values.len(), self.terminals.len()),
                    );
                }
            }
        }
        let grid = TimeGrid::new(self.grid.times.clone(), self.horizon)
            .map_err(|e| ConfigError { path: "config.grid.times".into(), reason: e.to_string() })?;
        if self.sampler.count < 2 {
            return reject(
                "sampler.count",
                format!("moment estimates need at least two paths, got {}", self.sampler.count),
            );
        }
        if self.model == Model::PeriodicOuSde {
            let steps = self.effective_steps();
            let dt = self.horizon / steps as f64;
            let min_gap = grid.gaps_with_boundary().into_iter().fold(f64::INFINITY, f64::min);
            if steps < 2 || dt > 0.5 * min_gap {
                return reject(
                    "sampler.steps",
                    format!(
                        "{steps} Euler steps resolve dt = {dt:.3e}; need at most half the smallest grid gap {min_gap:.3e}"
                    ),
                );
            }
        } else if self.sampler.steps.is_some() {
            return reject(
                "sampler.steps",
                format!("only periodic_ou_sde integrates a scheme; {} draws from its law exactly", self.model),
            );
        }
        for (name, v) in [
            ("kernel", self.tolerances.kernel),
            ("partition", self.tolerances.partition),
            ("precision", self.tolerances.precision),
            ("trace", self.tolerances.trace),
            ("stationarity", self.tolerances.stationarity),
            ("z_gate", self.tolerances.z_gate),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return reject(&format!("tolerances.{name}"), format!("must be positive, got {v}"));
            }
        }
        Ok(())
    }

    /// Oscillator parameters. Callers validate first; a config that passed
    /// `validate` cannot fail here.
    pub fn harmonic(&self) -> HarmonicSpec {
        HarmonicSpec::new(self.dimension, self.lambda, self.horizon).expect("validated config")
    }

    pub fn time_grid(&self) -> TimeGrid {
        TimeGrid::new(self.grid.times.clone(), self.horizon).expect("validated config")
    }

    pub fn effective_steps(&self) -> usize {
        self.sampler.steps.unwrap_or(4096)
    }

    /// Unnormalized masses over the bridge components. Downstream
    /// constructors renormalize, so thermal masses skip the shared shift.
    pub fn component_masses(&self) -> Vec<f64> {
        match &self.weights {
            WeightsPolicy::Gibbs { .. } => (0..self.terminals.len())
                .map(|m| (-self.lambda * self.horizon * m as f64).exp())
                .collect(),
            WeightsPolicy::Explicit { values } => values.clone(),
        }
    }
}

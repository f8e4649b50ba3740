//! Gauss-Hermite scale selection. The rule's `scale` argument is the
//! inverse width of the design envelope e^{-(scale x)^2}, and its rescaled
//! weights carry an e^{xi^2} factor that amplifies eigensolver noise at the
//! edge nodes. Keeping the true integrand decaying at least twice as fast
//! as the design envelope buries that noise under the integrand tail, so
//! every scale here is chosen with decay ratio >= 2.

use bernstein::oscillator::{bridge_moments, BridgeSpec};
use bernstein::spectral::HarmonicSpec;

use crate::config::ExperimentConfig;

/// Eigenbasis families: u_m v_m = h_m^2 decays like e^{-lambda x^2}.
pub fn eigen(lambda: f64) -> f64 {
    (0.5 * lambda).sqrt()
}

/// Diagonal-coupled marginal: a Gaussian with rate lambda tanh(lambda T/2).
pub fn thermal(lambda: f64, horizon: f64) -> f64 {
    (0.5 * lambda * (0.5 * lambda * horizon).tanh()).sqrt()
}

/// Pinned families: bridge marginals of width sigma, displaced up to the
/// largest terminal. The widening terms keep both the decay margin and the
/// coverage of the displaced bumps.
pub fn pinned(cfg: &ExperimentConfig) -> f64 {
    let spec = HarmonicSpec::new(1, cfg.lambda, cfg.horizon).expect("validated config");
    let bspec = BridgeSpec::new(spec, vec![0.0]).expect("validated config");
    let mid = 0.5 * cfg.horizon;
    let sigma = bridge_moments(&bspec, mid, mid).expect("interior time").variance.sqrt();
    let bmax = cfg
        .terminals
        .iter()
        .flat_map(|b| b.iter())
        .fold(0.0f64, |acc, c| acc.max(c.abs()));
    (2.0 * sigma + 0.3 * bmax + 0.5).recip()
}

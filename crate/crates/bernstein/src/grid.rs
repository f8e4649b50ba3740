//! Interior time grids for finite-dimensional distributions.

use crate::error::{Error, Result};

/// Strictly increasing times inside the open interval (0, T).
///
/// The endpoints are excluded because the laws built on a grid condition on
/// data at 0 and T; evaluating a transition kernel over a zero-length gap is
/// never meaningful. Validation happens once at construction so downstream
/// code can index freely.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
    horizon: f64,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>, horizon: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::invalid_parameter("horizon", format!("must be finite and positive, got {horizon}")));
        }
        if times.is_empty() {
            return Err(Error::invalid_grid("grid must contain at least one time"));
        }
        for (k, &t) in times.iter().enumerate() {
            if !(t.is_finite() && t > 0.0 && t < horizon) {
                return Err(Error::invalid_grid(format!(
                    "times[{k}] = {t} must lie strictly inside (0, {horizon})"
                )));
            }
            if k > 0 && t <= times[k - 1] {
                return Err(Error::invalid_grid(format!(
                    "times[{k}] = {t} does not increase past times[{}] = {}",
                    k - 1,
                    times[k - 1]
                )));
            }
        }
        Ok(TimeGrid { times, horizon })
    }

    /// Equally spaced interior grid t_k = k T/(n+1), k = 1..n.
    pub fn uniform_interior(n: usize, horizon: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid_grid("uniform interior grid needs n >= 1"));
        }
        let times = (1..=n).map(|k| k as f64 * horizon / (n + 1) as f64).collect();
        Self::new(times, horizon)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Gaps including the boundary segments: t_1 − 0, t_2 − t_1, .., T − t_n.
    pub fn gaps_with_boundary(&self) -> Vec<f64> {
        let n = self.times.len();
        let mut gaps = Vec::with_capacity(n + 1);
        gaps.push(self.times[0]);
        for k in 1..n {
            gaps.push(self.times[k] - self.times[k - 1]);
        }
        gaps.push(self.horizon - self.times[n - 1]);
        gaps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_interior_increasing_times() {
        let g = TimeGrid::new(vec![0.1, 0.5, 0.9], 1.0).unwrap();
        assert_eq!(g.len(), 3);
        let gaps = g.gaps_with_boundary();
        for (got, want) in gaps.iter().zip(&[0.1, 0.4, 0.4, 0.1]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_boundary_and_disorder() {
        assert!(TimeGrid::new(vec![0.0, 0.5], 1.0).is_err());
        assert!(TimeGrid::new(vec![0.5, 1.0], 1.0).is_err());
        assert!(TimeGrid::new(vec![0.5, 0.5], 1.0).is_err());
        assert!(TimeGrid::new(vec![0.6, 0.4], 1.0).is_err());
        assert!(TimeGrid::new(vec![], 1.0).is_err());
        assert!(TimeGrid::new(vec![0.5], -1.0).is_err());
    }

    #[test]
    fn uniform_interior_spacing() {
        let g = TimeGrid::uniform_interior(4, 1.0).unwrap();
        let expect = [0.2, 0.4, 0.6, 0.8];
        for (a, b) in g.times().iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}

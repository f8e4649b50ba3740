//! Bernstein (reciprocal) processes of the quantum harmonic oscillator.
//!
//! The crate builds the processes from their parabolic ingredients and checks
//! every identity along the way: heat kernels of −½Δ + λ²|x|²/2 in closed
//! Mehler form and as spectral sums, reciprocal densities and two-sided
//! transitions for pinned, Gibbs and mixture endpoint data, the closed-form
//! Gaussian bridge and stationary laws with their banded precision matrices,
//! trace-class density operators whose traces reproduce process expectations,
//! and exact Gaussian plus SDE samplers for all of them.

pub mod density;
pub mod error;
pub mod grid;
pub mod kernels;
pub mod numeric;
pub mod oscillator;
pub mod process;
pub mod quadrature;
pub mod sampler;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::TimeGrid;

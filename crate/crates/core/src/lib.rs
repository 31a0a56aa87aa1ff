//! Solver and analysis suite for non-convex rate-independent evolutions with
//! vanishing viscosity.
//!
//! The library integrates the regularized viscous system
//!
//! ```text
//!   lambda * du/dt + dR1(du/dt) - lap(u) + DW0(u) = f(t)
//! ```
//!
//! at a given scale `lambda`, keeps an exact per-step energy ledger, detects
//! the windows where the viscous term contributes in the slow-loading limit,
//! resolves the jump transients at the fast scale, builds the canonical slow
//! time, and assembles the whole thing into a certified two-speed solution
//! with its dissipation split into rate-independent and rate-dependent parts.
//!
//! Module map:
//! - [`grid`]: 0-D points and 1-D Dirichlet intervals, discrete Laplacian,
//!   norms and pairings.
//! - [`potentials`]: energy densities `W0`, loadings, total energies, and
//!   sampling-based validation of the structural constants.
//! - [`dissipation`]: 1-homogeneous dissipation potentials, their stability
//!   sets, and the smooth `delta`-regularization.
//! - [`solver`]: implicit incremental minimization at scale `lambda` plus the
//!   second-order fast-scale integrator.
//! - [`two_speed`]: energy-loss process, parabolic-window detection, jump
//!   resolution, stretching maps, dissipation measures, assembly and
//!   certification.
//! - [`diagnostics`]: stability histories, the oscillation certificate, and
//!   the variation sandwich.
//! - [`oracles`]: closed-form reference solutions for the built-in 0-D
//!   scenarios.
//! - [`scenarios`]: the named scenario registry and end-to-end run driver.
//!
//! The numerical kernels in [`grid`], [`potentials`], [`dissipation`] and
//! [`oracles`] are generic over the floating scalar; the orchestration layers
//! fix [`Real`].

pub mod diagnostics;
pub mod dissipation;
pub mod grid;
pub mod oracles;
pub mod potentials;
pub mod scalar;
pub mod scenarios;
pub mod solver;
pub mod two_speed;

/// Concrete scalar used by the solver and orchestration layers.
pub type Real = f64;

pub use grid::{Field, SpatialGrid};
pub use potentials::{EnergyDensity, Loading, TotalEnergy};
pub use dissipation::{DissipationPotential, RegularizedDissipation, StabilitySet};
pub use solver::{Problem, ViscousParams, ViscousTrajectory};
pub use two_speed::{TwoSpeedParams, TwoSpeedSolution};

//! Pseudo-spectral laboratory for the two-dimensional incompressible
//! porous media equation on the periodic box.
//!
//! The model is the active scalar transport of a density by the velocity
//! Darcy's law induces:
//!
//! ```text
//! rho_t + u . grad rho = 0
//! u = -grad p - (0, rho),    div u = 0
//! ```
//!
//! Eliminating the pressure on mean-zero data closes the velocity as a pair
//! of Riesz multipliers, `u = (-R1 R2 rho, R1 R1 rho)` with
//! `R_a = d_a (-Laplace)^{-1/2}`. The crate provides:
//!
//! * [`spectral`]: grids, transforms, multipliers, norms, interpolation;
//! * [`operators`]: the Darcy velocity, advection, and the commutator
//!   right-hand side of the Lagrangian formulation;
//! * [`transport`]: a fixed-step RK4 solver for the density;
//! * [`lagrangian`]: flow maps, their inversion and composition, particle
//!   trajectories, and a Chebyshev analyticity probe;
//! * [`experiments`]: bump data, the scaling identity check, constant
//!   estimation and the perturbation-sequence experiment built on them;
//! * [`io`]: run configs, binary field snapshots, CSV reports.
//!
//! Everything is deterministic: fixed seeds, fixed step counts, no
//! time-dependent state. Rerunning a configuration reproduces its outputs
//! byte for byte.

pub mod error;
pub mod experiments;
pub mod io;
pub mod lagrangian;
pub mod operators;
pub mod spectral;
pub mod transport;

pub use error::{Error, ErrorCategory, Result};

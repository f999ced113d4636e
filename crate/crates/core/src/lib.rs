//! Numerical toolkit for controlled ODE systems ordered by convex cones.
//!
//! The crate provides:
//!
//! - [`cone`]: closed convex cones (orthants and polyhedral cones), the induced
//!   preorder, the strict interior relation and dual-cone machinery;
//! - [`dynamics`]: controlled systems `f(x,u)`, finite-difference Jacobians and
//!   sampled verification of quasimonotonicity and control reductions;
//! - [`flow`]: fixed-step RK4 integration under piecewise-constant control paths;
//! - [`comparison`]: numerical flow-comparison checks between ordered trajectory
//!   pairs, plus an epsilon-perturbation diagnostic;
//! - [`viability`]: grid-based viability kernel approximation with a discrete
//!   fixed-point sweep, reduced dynamics and extended desirable sets;
//! - [`wolbachia`]: a four-state mosquito biocontrol model used as the end-to-end
//!   case study (full control family vs. a single constant control);
//! - [`systems`]: small built-in benchmark systems shared by tests and the CLI.

pub mod comparison;
pub mod cone;
pub mod dynamics;
pub mod error;
pub mod flow;
pub mod systems;
pub mod viability;
pub mod wolbachia;

mod util;

pub use error::{Error, Result};

//! Discrete fractional p-Laplacian eigenvalue systems on intervals and planar
//! boxes or discs, their principal eigenpairs, and the p → ∞ asymptotics.
//!
//! The main entry points are [`eigensolver::solve`] for one exponent and
//! [`asymptotics::sweep`] for an increasing list of exponents.
//!
//! ```
//! use std::sync::Arc;
//! use fraclap_core::domain::build_interval;
//! use fraclap_core::eigensolver::{solve, AlphaRule, Init, ProblemSpec, SolveOptions, Variant};
//!
//! # fn main() -> fraclap_core::Result<()> {
//! let grid = Arc::new(build_interval(0.0, 1.0, 32)?);
//! let x0 = grid.snap(&[0.5])?;
//! let spec = ProblemSpec::new(grid, Variant::P1 { x0 }, 0.5, 0.5, 0.5, 16.0, AlphaRule::Linear)?;
//! let pair = solve(&spec, Init::Cones, &SolveOptions::default())?;
//! assert!(pair.converged && pair.lambda_root(16.0) > 1.0);
//! # Ok(())
//! # }
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod domain;
pub mod eigensolver;
pub mod error;
pub mod exec;
pub mod field;
pub mod logspace;
pub mod nonlocal;
pub mod oracle;
pub mod selftest;
pub mod viscosity;

pub use domain::{build_box2d, build_interval, distance_field, DomainGrid, MaskRule};
pub use eigensolver::{EigenPair, ProblemSpec, Variant};
pub use error::{Error, Result};
pub use field::ScalarField;
pub use logspace::LogEnergy;

//! Diffuse-interface phase separation on triangulated surfaces.
//!
//! The crate evaluates Modica–Mortola type energies and phase-weighted
//! Willmore energies on triangle meshes, checks the discrete mass identities
//! of graph currents over piecewise-constant phase fields, and minimizes the
//! diffuse energy under a mass constraint with ε-continuation.
//!
//! Modules, bottom-up:
//!
//! - [`potential`]: double-well potentials, first integrals, surface tension.
//! - [`surface`]: meshes, measures, gradients, mean curvature.
//! - [`currents`]: graph masses, jump sets, convergence diagnostics.
//! - [`energy`]: diffuse and sharp energies, Li–Yau density diagnostic.
//! - [`minimize`]: mass-constrained descent, recovery fields, continuation.
//! - [`harness`]: configuration, experiment drivers, file formats.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod currents;
pub mod energy;
pub mod error;
pub mod harness;
pub mod minimize;
pub mod potential;
pub mod surface;

pub use error::{Error, Result};

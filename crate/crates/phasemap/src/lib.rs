//! Linear and affine phase-space maps between quadratic Hamiltonian systems.
//!
//! The crate carries five connected toolsets:
//!
//! - [`transport`]: block transport equations `dT/dtau = B Ybar T - T C Z`
//!   for the matrix of a phase-space map, their factor forms, and fixed-step
//!   integration with CSV trajectory output.
//! - [`flat_mapping`]: closed-form transport between two free systems,
//!   conformal frames, the lowered position/velocity maps into physical
//!   coordinates, and the three-way Hamiltonian equality check.
//! - [`riccati`]: exact solution families of the matrix Riccati transport
//!   equations — members built from polynomial integrands that satisfy the
//!   membership constraint — with residual verification behind a
//!   conditioning gate.
//! - [`conformal_embed`]: vielbein fields, conformal flattening along
//!   unit-speed curves, the null-cone embedding into a flat space two
//!   dimensions larger, and line-element chain comparisons.
//! - [`calabi`]: Hessian metrics of convex potentials, finite-difference
//!   curvature tensors, the curvature identity special to Hessian metrics,
//!   and the geodesic Lagrangian/Hamiltonian pair.
//!
//! [`scenario`] wires the toolsets into five named verification scenarios
//! driven by JSON configs that emit deterministic reports; the `phasemap`
//! binary is a thin CLI over it. [`phase_space`] holds the shared state
//! types and [`numerics`] the stencils, integrators, and the seeded
//! generator that makes every run reproducible.

pub mod calabi;
pub mod conformal_embed;
pub mod error;
pub mod flat_mapping;
pub mod numerics;
pub mod phase_space;
pub mod riccati;
pub mod scenario;
pub mod transport;

pub use error::{Error, Result};

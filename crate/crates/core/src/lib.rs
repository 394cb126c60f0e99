//! episdyn: SIR/SIRS epidemic dynamics with non-monotone incidence
//! `beta S I / (1 + alpha I^2)` and per-compartment mortality.
//!
//! The crate provides:
//!
//! - [`model`] — parameters, incidence functions, the full and reduced planar
//!   vector fields, and the invariant simplex with its guard;
//! - [`equilibria`] — the reproduction number, both equilibria in closed form,
//!   Jacobians, eigenvalues, and local stability classification;
//! - [`certify`] — Lyapunov values/derivatives and the Dulac-weighted
//!   divergence, with grid scans that certify their signs;
//! - [`integrate`] — fixed-step RK4 and adaptive Dormand–Prince 5(4)
//!   trajectories with convergence detection;
//! - [`cli`] — the `episdyn` command set (analyze, simulate, certify, sweep).

pub mod certify;
pub mod cli;
pub mod equilibria;
pub mod integrate;
pub mod model;

pub use equilibria::{r0, Equilibrium, StabilityReport};
pub use model::{FullState, IncidenceKind, Params, PlanarState};

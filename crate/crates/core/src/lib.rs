//! Verification and Monte Carlo benchmarks for steady Darcy flow in
//! log-normal random conductivity fields.
//!
//! The flow problem is `-div(K grad h) = rhs` on a rectangle (or interval),
//! with Dirichlet data at the inflow/outflow ends and no-flow boundaries on
//! the remaining sides. Conductivity realizations come from [`kraichnan`];
//! four solvers ([`fdm`], [`fem`], [`grw`], [`csm`]) are checked against the
//! closed-form solutions in [`manufactured`], and [`mc`] compares ensemble
//! statistics with first-order perturbation theory.

pub mod csm;
pub mod error;
pub mod fdm;
pub mod fem;
pub mod grid;
pub mod grw;
pub mod kraichnan;
pub mod linalg;
pub mod manufactured;
pub mod mc;
pub mod postproc;

pub use error::{Error, Result};
pub use grid::{GridSpec, HeadField};
pub use kraichnan::{sample_modes, Correlation, KField, ModeSet, RandomFieldModel};

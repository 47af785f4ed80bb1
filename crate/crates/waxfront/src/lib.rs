//! Wax-layer growth on a cooled pipe wall: a one-phase moving-boundary
//! problem with temperature-dependent conductivity.
//!
//! The crate provides the explicit finite-difference solver for the
//! boundary-fixed formulation, the closed-form steady states, two-term
//! small-time series, the principal decay-rate eigenproblem, the
//! fast-conduction outer solution, and a cross-regime validation harness
//! that reconciles all of them over a parameter sweep.

pub mod conductivity;
pub mod eigen;
pub mod error;
pub mod outer;
pub mod output;
pub mod physical;
mod quad;
pub mod small_time;
pub mod solver;
pub mod steady_state;
pub mod sweep;

pub use conductivity::{Conductivity, ConductivitySpec};
pub use error::{Error, Result};
pub use solver::{RunRecord, SolverConfig, SolverState};
pub use sweep::{SweepResult, SweepSpec};

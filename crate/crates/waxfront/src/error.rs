use thiserror::Error;

use crate::solver::SolverState;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{name} = {value} outside [{min}, {max}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("no steady wax layer exists for k = {k}; growth requires k > 1")]
    NoSteadyState { k: f64 },

    #[error("no eigenvalue sign change found in (0, {lambda_max}]")]
    NoRoot { lambda_max: f64 },

    #[error("converged eigenfunction changes sign (higher mode captured)")]
    NonPositiveEigenfunction,

    #[error("need at least {needed} samples in the fit window, found {found}")]
    InsufficientData { needed: usize, found: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid physical parameters: {0}")]
    InvalidPhysical(String),

    #[error("front height {h} is not positive; cannot form a stable step")]
    DegenerateFront { h: f64 },

    #[error("solution blew up at t = {t} after {step} steps (stability violated)")]
    BlowUp {
        t: f64,
        step: u64,
        /// Last state that still satisfied the blow-up guard.
        last_valid: Box<SolverState>,
    },

    #[error("config parse error: {0}")]
    ParseError(String),

    #[error("insufficient sweep coverage: {0}")]
    InsufficientCoverage(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

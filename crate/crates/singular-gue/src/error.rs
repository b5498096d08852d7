//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the numerical engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("u2 must be positive, got {0}")]
    NonPositiveU2(f64),

    #[error("reduction requires u1 = 0 within {tol:.1e}, got u1 = {u1}")]
    NonZeroU1 { u1: f64, tol: f64 },

    #[error(
        "state violates the reduction constraint: |P2| = {p2:.3e}, |Q2 residual| = {q2:.3e}, tolerance {tol:.1e}"
    )]
    ConstraintViolated { p2: f64, q2: f64, tol: f64 },

    #[error("gauge coefficient b3 must be nonzero")]
    ZeroGauge,

    #[error("matrix data violates the spectral constraints: max residual {0:.3e}")]
    InvalidLaxData(f64),

    #[error("evaluation at the pole zeta = 0")]
    PoleAtOrigin,

    #[error("argument {value} outside the validity window |x| <= {window}")]
    OutsideWindow { value: f64, window: f64 },

    #[error("seed point u2 = {u2:.3e} outside the seeding window (0, {window:.1e}]")]
    SeedWindow { u2: f64, window: f64 },

    #[error("step size underflow at parameter {at:.6e} after {accepted} accepted steps")]
    StepSizeUnderflow { at: f64, accepted: usize },

    #[error("step budget of {0} steps exhausted before reaching the target")]
    MaxStepsExceeded(usize),

    #[error("flow would cross u2 = 0 (target {0})")]
    CrossesOrigin(f64),

    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),

    #[error("weight parameters invalid: {0}")]
    InvalidWeight(String),

    #[error("matrix dimension N = {n} exceeds the double-precision cap {cap}")]
    OracleSizeCap { n: usize, cap: usize },

    #[error(
        "orthogonal basis unstable under refinement: relative norm drift {drift:.3e} exceeds {tol:.1e}"
    )]
    RefinementFailure { drift: f64, tol: f64 },

    #[error("log-derivatives require z > 0")]
    ZeroZ,

    #[error("coefficient cache: {0}")]
    CacheFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

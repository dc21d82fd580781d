use thiserror::Error;

/// Errors raised by the numerical and symbolic routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid rate family: {0}")]
    InvalidRate(String),

    #[error("integration failed at t = {t}: step size underflow (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("integration failed at t = {t}: {reason}")]
    IntegrationFailure { t: f64, reason: String },

    #[error("overflow at t = {t}: |rho| = {rho} exceeds the representable range")]
    Overflow { t: f64, rho: f64 },

    #[error("Wei-Norman factorization became singular at t = {t} (condition estimate {cond:e})")]
    Singular { t: f64, cond: f64 },

    #[error("gauge state inconsistent: {0}")]
    GaugeInconsistent(String),

    #[error("truncation failure: {0}")]
    Truncation(String),

    #[error("tail mass {tail_mass:e} too heavy for a moment estimate (limit {limit:e})")]
    TailTooHeavy { tail_mass: f64, limit: f64 },

    #[error("unbounded rate on [{t0}, {t1}]")]
    UnboundedRate { t0: f64, t1: f64 },

    #[error("algebra is not closed: {0}")]
    NotClosed(String),

    #[error("invalid Lie algebra: {0}")]
    InvalidAlgebra(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),
}

pub type Result<T> = std::result::Result<T, Error>;

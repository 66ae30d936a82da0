use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("radius must be positive, got {0}")]
    InvalidRadius(f64),

    #[error("box bounds invalid at coordinate {index}: lo = {lo} > hi = {hi}")]
    InvalidBox { index: usize, lo: f64, hi: f64 },

    #[error("agent {agent} starts outside its feasible set (violation {violation:e})")]
    Infeasible { agent: usize, violation: f64 },

    #[error("step size {0} outside [0, 1]")]
    InvalidStep(f64),

    #[error("invalid index order: transition matrix needs k >= s - 1, got k = {k}, s = {s}")]
    IndexOrder { k: i64, s: i64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("oracle did not converge: fw gap {gap:e} after {iterations} iterations (tol {tol:e})")]
    NonConvergence {
        iterations: usize,
        gap: f64,
        tol: f64,
    },

    #[error("oracle cross-check failed: frank-wolfe f* = {fw} vs projected-gradient f* = {pg}")]
    OracleMismatch { fw: f64, pg: f64 },

    #[error("stale oracle cache at {path}: config hash {found} does not match {expected}")]
    StaleCache {
        path: PathBuf,
        found: String,
        expected: String,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("invariant `{check}` violated at round {round}")]
    Invariant { check: String, round: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Process exit code: 1 for configuration and input errors, 2 for
    /// invariant failures, 3 for oracle non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invariant { .. } => 2,
            Error::NonConvergence { .. } | Error::OracleMismatch { .. } => 3,
            _ => 1,
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

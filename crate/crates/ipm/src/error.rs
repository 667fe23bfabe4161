//! Error type shared across the crate.
//!
//! Variants fall into three categories, which the CLI maps onto exit codes:
//! input/validation problems, solver aborts raised by the runtime guards
//! (CFL, norm surveillance, degenerate flow maps), and plain I/O failures.

use std::path::PathBuf;

/// Coarse classification of an [`Error`], used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Bad input: grid parameters, non-finite data, config or snapshot rejects.
    Validation,
    /// The solver refused to continue (CFL guard, blow-up surveillance, ...).
    SolverAbort,
    /// Filesystem trouble.
    Io,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {reason}")]
    Grid { reason: String },

    #[error("non-finite value in {context} at sample index {index}")]
    NonFinite { context: &'static str, index: usize },

    #[error("field mean {mean:e} exceeds the mean-zero tolerance {tol:e}")]
    NotMeanZero { mean: f64, tol: f64 },

    #[error("grid mismatch: expected {expected}, found {found}")]
    GridMismatch { expected: String, found: String },

    #[error("spectral data breaks Hermitian symmetry: defect {defect:e} vs scale {scale:e}")]
    HermitianDefect { defect: f64, scale: f64 },

    #[error("multiplier symbol is non-finite at xi = ({xi1}, {xi2})")]
    SymbolNonFinite { xi1: f64, xi2: f64 },

    #[error("invalid argument: {what}")]
    BadArgument { what: String },

    #[error(
        "bump support comes within {actual} of the periodic seam (margin {required} required)"
    )]
    SeamMargin { required: f64, actual: f64 },

    #[error("bump of radius {radius} contains no grid sample (spacing {spacing}); cannot normalize")]
    EmptySupport { radius: f64, spacing: f64 },

    #[error(
        "flow derivative magnitude {magnitude:e} at the probe point is below {threshold:e}; \
         choose a different direction field or probe point"
    )]
    DegenerateProbe { magnitude: f64, threshold: f64 },

    #[error("CFL guard tripped at step {step}: courant number {courant} exceeds {limit}")]
    Cfl { step: usize, courant: f64, limit: f64 },

    #[error(
        "norm surveillance tripped at step {step}: H^s norm {norm:e} exceeds {limit:e}"
    )]
    Surveillance { step: usize, norm: f64, limit: f64 },

    #[error("flow map lost orientation at step {step}: min det(dphi) = {min_det:e}")]
    NonPositiveJacobian { step: usize, min_det: f64 },

    #[error(
        "flow map inversion stalled after {iterations} iterations: residual {residual:e} > {tol:e}"
    )]
    InversionStalled { residual: f64, tol: f64, iterations: usize },

    #[error("config error on line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("snapshot rejected at byte offset {offset}: {message}")]
    Snapshot { offset: usize, message: String },

    #[error("refusing to overwrite existing file {path:?} (pass --force to allow)")]
    Overwrite { path: PathBuf },

    #[error("I/O error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Cfl { .. }
            | Error::Surveillance { .. }
            | Error::NonPositiveJacobian { .. }
            | Error::InversionStalled { .. } => ErrorCategory::SolverAbort,
            Error::Io { .. } => ErrorCategory::Io,
            _ => ErrorCategory::Validation,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

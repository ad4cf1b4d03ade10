use thiserror::Error;

use crate::dos::DosCurve;
use crate::threshold::ThresholdDiagnostics;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected length {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid spectral window: lambda_max ({max}) must exceed lambda_min ({min})")]
    InvalidWindow { min: f64, max: f64 },

    #[error("invalid interval [{a}, {b}]: {reason}")]
    InvalidInterval { a: f64, b: f64, reason: &'static str },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("Krylov dimension {steps} exceeds operator dimension {n}")]
    KrylovTooLarge { steps: usize, n: usize },

    #[error("{0}")]
    Breakdown(String),

    #[error("{what} did not converge within {budget} iterations")]
    NoConvergence { what: &'static str, budget: usize },

    #[error(
        "Chebyshev recurrence blew up (|v^T T_{degree}(B) v| = {value:e}); the spectrum \
         escapes the mapped window, increase the safety margin"
    )]
    Divergence { degree: usize, value: f64 },

    #[error("no spectral gap detected: {reason}")]
    NoGap {
        reason: String,
        diagnostics: Box<ThresholdDiagnostics>,
        /// The curve the selection ran on, when the failure happened inside a
        /// rank pipeline.
        dos: Option<Box<DosCurve>>,
    },

    #[error("KPM interval counting needs the per-probe moment table; rebuild moments with it retained")]
    MissingProbeTable,

    #[error("dense eigensolver cap exceeded: n = {n} > {cap}; use the KPM or Lanczos estimators instead")]
    CapExceeded { n: usize, cap: usize },

    #[error("oracle verification failed: residual {residual:e} for eigenvalue {lambda} exceeds {limit:e}")]
    VerificationFailed { lambda: f64, residual: f64, limit: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse { line, message: message.into() }
    }

    /// Attaches the DOS curve to a no-gap error raised by threshold selection.
    pub(crate) fn with_dos(self, curve: &DosCurve) -> Self {
        match self {
            Error::NoGap { reason, diagnostics, .. } => {
                Error::NoGap { reason, diagnostics, dos: Some(Box::new(curve.clone())) }
            }
            other => other,
        }
    }
}

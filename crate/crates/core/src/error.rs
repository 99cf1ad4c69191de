use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate system: {0}")]
    DegenerateSystem(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("divergence: {0}")]
    Divergence(String),
    #[error("accuracy target not met in {context}: estimate {achieved:.3e} vs target {target:.3e}")]
    Accuracy {
        context: String,
        achieved: f64,
        target: f64,
    },
    #[error("stiffness: step size underflow at t = {t:.6e} (h = {h:.3e})")]
    Stiffness { t: f64, h: f64 },
    #[error("invariant violated in {context}: {detail}")]
    InvariantViolation { context: String, detail: String },
    #[error("structural error: {0}")]
    Structural(String),
    #[error("convention mismatch: bridge discrepancy {discrepancy:.3e} exceeds {limit:.3e}")]
    ConventionMismatch { discrepancy: f64, limit: f64 },
    #[error("overdamped renormalization: Omega_R^2 = {0:.6e} <= 0")]
    OverdampedRenormalization(f64),
    #[error("singularity: |G({tau:.6})| = {value:.3e} is below the node threshold {threshold:.3e}")]
    Singularity { tau: f64, value: f64, threshold: f64 },
    #[error("inversion failure: {0}")]
    Inversion(String),
    #[error("instability: {0}")]
    Instability(String),
    #[error("truncation: boundary population {population:.3e} exceeds {limit:.1e} (n_max = {n_max})")]
    Truncation { population: f64, limit: f64, n_max: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

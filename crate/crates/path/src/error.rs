//! Error type for path construction and realization.

use sympl_core::CoreError;
use thiserror::Error;

/// Everything that can go wrong while validating a path description or
/// realizing it into a sampled symplectic path.
#[derive(Debug, Error)]
pub enum PathError {
    /// A structural problem in the path description itself (inconsistent
    /// durations, empty composites, malformed generator grids, …).
    #[error("invalid path description: {detail}")]
    BadSpec { detail: String },

    /// Children of a composite disagree on phase-space dimension.
    #[error("dimension mismatch: expected 2n = {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The realized frames lost symplecticity beyond the per-unit-time
    /// budget.  Signals that the generator is too rough for the current
    /// step control and the description needs a finer grid.
    #[error(
        "symplecticity drift {drift:.3e} at t = {t:.6} exceeds budget {budget:.3e}; \
         refine the generator sampling or reduce the integration step"
    )]
    DriftExceeded { drift: f64, budget: f64, t: f64 },

    /// Adaptive step control collapsed below the minimum step width,
    /// i.e. the generator could not be integrated to tolerance.
    #[error("integration step underflow at t = {t:.6} (step {step:.3e})")]
    StepUnderflow { t: f64, step: f64 },

    /// Consecutive realized samples jumped by more than the continuity
    /// guard allows — almost always a symptom of a wild generator grid.
    #[error(
        "frame discontinuity between t = {t_prev:.6} and t = {t:.6}: \
         jump {jump:.3e} exceeds guard {guard:.3e}"
    )]
    ContinuityGuard {
        t_prev: f64,
        t: f64,
        jump: f64,
        guard: f64,
    },

    /// An underlying matrix-level failure.
    #[error(transparent)]
    Core(#[from] CoreError),
}

//! Error taxonomy for index computations.

use thiserror::Error;

/// Everything that can go wrong while computing index invariants.
#[derive(Debug, Error)]
pub enum IndexError {
    /// An assembled invariant failed to land on an integer within
    /// tolerance.  Contributions are signature counts, so this indicates
    /// corrupted inputs rather than rounding drift.
    #[error("index value {value} is not within {tol:.1e} of an integer")]
    NonIntegerIndex { value: f64, tol: f64 },

    /// The crossing structure could not be resolved: a crossing form was
    /// degenerate at every regularizing shift, the shift ladder
    /// disagreed with itself, or a kernel dimension stayed ambiguous.
    #[error("crossing structure near t = {t} could not be resolved: {detail}")]
    UnresolvedCrossing { t: f64, detail: String },

    /// The query angle is too close to an endpoint eigenvalue cluster to
    /// tell which side of it is meant, yet too far to identify with it.
    #[error(
        "angle {theta} lies {distance:.3e} from an endpoint eigenvalue: \
         too close to resolve a side, too far to identify with it"
    )]
    SpectralProximity { theta: f64, distance: f64 },

    /// Path construction or evaluation failed.
    #[error(transparent)]
    Path(#[from] sympl_path::PathError),

    /// Endpoint linear algebra failed.
    #[error(transparent)]
    Core(#[from] sympl_core::CoreError),
}

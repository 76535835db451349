//! Error catalogue for the core linear-algebra layer.

use thiserror::Error;

/// Errors produced by matrix validation, spectrum extraction, and the
/// eigenvalue-one normal-form oracle.
///
/// Every variant is a hard failure: the caller asked for a certified
/// quantity and the input (or the numerics) could not deliver it. Nothing
/// in this crate silently re-projects or rounds its way past a violated
/// invariant.
#[derive(Debug, Error)]
pub enum CoreError {
    /// ‖MᵀJM − J‖ exceeded the admission tolerance.
    #[error("matrix is not symplectic: structure defect {defect:.3e} exceeds tolerance {tol:.3e}")]
    NotSymplectic { defect: f64, tol: f64 },

    /// det M strayed from +1 further than the admission tolerance allows.
    #[error("matrix determinant {det:.12} is not within {tol:.3e} of +1")]
    DeterminantDrift { det: f64, tol: f64 },

    /// A matrix had odd size, or two operands disagreed in size.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Two spectral clusters sit closer than twice the clustering
    /// tolerance, so multiplicities cannot be assigned unambiguously.
    #[error("spectral clusters separated by {distance:.3e} < required {required:.3e}; multiplicities ambiguous at this tolerance")]
    ClusterAmbiguity { distance: f64, required: f64 },

    /// The extracted eigenvalue-one restriction is not totally degenerate
    /// (it carries an eigenvalue away from one), or its block bookkeeping
    /// is internally inconsistent.
    #[error("eigenvalue-one block extraction failed: {detail}")]
    NotTotallyDegenerateBlock { detail: String },

    /// The logarithm of the unipotent restriction did not converge or did
    /// not invert the exponential to tolerance.
    #[error("matrix logarithm failed on the unipotent block: {detail}")]
    LogFailure { detail: String },

    /// A numerical rank decision had no clear singular-value gap.
    #[error("numerical rank ambiguous: {detail}")]
    RankAmbiguity { detail: String },

    /// The normal-form oracle is desk-scale by contract.
    #[error("dimension 2·{dim_half} exceeds the supported bound 2·{max} for the normal-form oracle")]
    DimensionTooLarge { dim_half: usize, max: usize },
}

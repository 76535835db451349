//! Index invariants of symplectic paths.
//!
//! For a path Γ: [0, T] → Sp(2n) starting at the identity this crate
//! computes the family of invariants that governs how indices grow under
//! iteration:
//!
//! * **μ(Γ)** — the index of the path with the lower-semicontinuous
//!   endpoint convention ([`cz_index`]), and μ_RS = μ + ν₁/2;
//! * **𝓑(z)** — the z-index over the unit circle ([`bott`]), whose value
//!   at z = 1 is μ and whose circle average is the mean index μ̂
//!   ([`mean_index`]);
//! * **𝓑⁺(z)** — its upper semicontinuous partner ([`bott_plus`]),
//!   computed as −𝓑 of the inverse path;
//! * **S±_z** — splitting numbers, the one-sided jumps of 𝓑 at an
//!   endpoint eigenvalue ([`splitting_numbers`]);
//! * **the defect 2·S⁺₁ − ν₁** and the derived strong-dynamical-convexity
//!   value μ + defect ([`defect`], [`sdc_value`]);
//! * **[`BottProfile`]** — the entire landscape of 𝓑 (finitely many
//!   spectral points plus constant arcs), from which μ(Γᵏ), ν(Γᵏ) and μ̂
//!   follow for every k by root-of-unity bookkeeping ([`bott_profile`]);
//! * **[`IndexReport`]** — one consistent snapshot of all of the above
//!   ([`index_report`]).
//!
//! Everything reduces to counting regular crossings: 𝓑(z) is the signed
//! count of times the spectrum of Γ(t) passes through z, each crossing
//! weighted by the signature of the Hermitian form the generator induces
//! on the crossing kernel.  The engine evaluates paths exactly (closed
//! forms and group rules), splits direct sums into invariant blocks, and
//! when a crossing is degenerate re-runs the count on the regularized
//! flows of A(t) − s·Id for a ladder of shifts, accepting only unanimous
//! verdicts.  Queries that cannot be decided honestly — ambiguous
//! kernels, disagreeing shifts, angles too close to an eigenvalue to
//! take sides — come back as errors, never as guesses.
//!
//! The [`oracle`] and [`sampling`] modules are validation utilities used
//! by the test and acceptance suites: an independent slow estimator of
//! the index as an infimum over endpoint perturbations, and a zoo of
//! random paths with predictable structure.

mod crossings;
mod engine;
mod error;
mod profile;
mod report;

pub mod oracle;
pub mod sampling;

pub use error::IndexError;
pub use profile::{BottProfile, ProfileArc, ProfilePoint};
pub use report::{
    bott, bott_plus, bott_profile, cz_index, defect, index_report, mean_index, nullity,
    sdc_value, splitting_numbers, IndexReport,
};

//! Symplectic linear algebra for path-index computations.
//!
//! This crate fixes the conventions every downstream crate relies on and
//! provides three building blocks:
//!
//! * [`SymplecticMatrix`] — validated elements of Sp(2n, ℝ) in the
//!   interleaved Darboux layout (q₁, p₁, …, q_n, p_n), with the standard
//!   structure matrix J = ⊕ [[0, 1], [−1, 0]] and form ω(u, v) = uᵀJv
//!   normalized by ω(e_q, e_p) = +1;
//! * [`circle_spectrum`] — unit-circle eigenvalue clusters with geometric
//!   and algebraic multiplicities (ν_z, η_z), robust to the eigenvalue
//!   splay of defective blocks;
//! * [`eigen1_normal_form`] — block counts (identity, Q₀, Q₊, Q₋) of the
//!   eigenvalue-one part of a symplectic matrix, the data behind the
//!   degeneracy defect b₋ − b₊.
//!
//! Every admission check is a hard error: nothing re-projects, rounds, or
//! guesses past a violated invariant.

pub mod eigen1;
pub mod error;
pub mod matrix;
pub mod spectrum;

pub use eigen1::{eigen1_normal_form, Eigen1Decomposition, MAX_DIM_HALF};
pub use error::CoreError;
pub use matrix::{matrix_exp, standard_j, symplectic_defect, SymplecticMatrix, SYMPLECTIC_TOL};
pub use spectrum::{circle_spectrum, circular_distance, CircleSpectrum, SpectrumPoint, SPECTRUM_TOL};

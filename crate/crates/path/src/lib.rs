//! Construction and realization of paths in the symplectic group.
//!
//! Paths start at the identity of Sp(2n, ℝ) and are described either
//! declaratively — a [`PathSpec`] combining rotation blocks, shears,
//! sampled generators, and composites, with a stable JSON wire format —
//! or programmatically through the operations on [`SymplecticPath`].
//!
//! Realization produces a path that can answer exact frame and
//! generator queries at arbitrary times:
//!
//! * primitive blocks and all group-level composites (products,
//!   inverses, iterates, concatenations, loop twists, half-period
//!   extensions) evaluate in closed form,
//! * sampled generators are interpolated linearly (the interpolant is
//!   definitional) and integrated once with an adaptive Dormand–Prince
//!   scheme whose accepted nodes support deterministic local refinement.
//!
//! Every realization validates duration bookkeeping, keeps frames on the
//! symplectic group within a drift budget of 10⁻⁸ per unit time, guards
//! against discontinuous data, and spot-checks that the generator
//! evaluators actually solve the frame ODE Γ̇ = J·A(t)·Γ.

mod error;
mod integrate;
mod kernel;
mod path;
mod spec;

pub use error::PathError;
pub use integrate::{integrate_flow, DenseFlow, DRIFT_PER_UNIT, INTEGRATION_TOL};
pub use path::{realize, realize_default, SymplecticPath, DEFAULT_RESOLUTION};
pub use spec::{PathBody, PathSpec};

//! Declarative path descriptions.
//!
//! A [`PathSpec`] is a duration together with a [`PathBody`], a small
//! expression language over symplectic paths that serializes to a tagged
//! JSON object.  Every composite node carries its own duration so that
//! descriptions are locally checkable:
//!
//! * `DirectSum` children must all share the parent's duration,
//! * `Iterate` must satisfy duration = k · base duration,
//! * `Inverse` and `LoopMultiply` preserve the base duration,
//! * `Concatenate` durations add,
//! * `HalfPeriodExtend` doubles the base duration.
//!
//! Validation of these relations happens in [`crate::realize`]; this
//! module only fixes the wire format.
//!
//! ```json
//! { "duration": 1.0, "body": { "type": "RotationBlock", "weight": -1.0 } }
//! ```

use serde::{Deserialize, Serialize};

/// A path description: total duration plus the body expression.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSpec {
    /// Total time span [0, duration].
    pub duration: f64,
    /// The structural description of the path.
    pub body: PathBody,
}

/// The body expression language.  Primitive blocks live in Sp(2);
/// composites combine sub-paths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum PathBody {
    /// Planar rotation flow Γ(t) = exp(2π·weight·t·J₂): `weight` counts
    /// signed full turns per unit time.  Weight −1 over one time unit
    /// traverses the negative rotation exp(−2πt·J₂) and returns to the
    /// identity.  Weight 0 is the constant identity path in Sp(2).
    RotationBlock {
        /// Signed turns per unit time.
        weight: f64,
    },

    /// Planar shear Γ(t) = [[1, slope·t], [0, 1]], the flow of the
    /// degenerate quadratic Hamiltonian ½·slope·p².
    ShearBlock {
        /// Rate of the off-diagonal entry.
        slope: f64,
    },

    /// A linear Hamiltonian flow Γ̇ = J·A(t)·Γ with the symmetric
    /// generator A(t) given by samples on a time grid.  Between grid
    /// points the generator is interpolated linearly; the interpolant is
    /// the definition of the path, not an approximation of it.
    GeneratorODE {
        /// Strictly increasing sample times from 0 to the duration.
        grid: Vec<f64>,
        /// One symmetric 2n×2n matrix per grid time, row-major rows.
        values: Vec<Vec<Vec<f64>>>,
    },

    /// Block-diagonal juxtaposition of equal-duration paths.
    DirectSum {
        /// The summands, in block order.
        children: Vec<PathSpec>,
    },

    /// The k-fold iterate t ↦ Γ(t − jT)·Γ(T)^j on [0, kT]; the generator
    /// repeats with period T.
    Iterate {
        /// The path being iterated.
        base: Box<PathSpec>,
        /// Number of repetitions (≥ 1).
        k: u32,
    },

    /// The pointwise group inverse t ↦ Γ(t)⁻¹.
    Inverse {
        /// The path being inverted.
        base: Box<PathSpec>,
    },

    /// Run the segments one after another, each starting where the
    /// previous one ended: Γ(T₁ + … + T_{j−1} + s) = Γ_j(s)·Γ_{j−1}(T_{j−1})⋯Γ₁(T₁).
    Concatenate {
        /// The segments in time order.
        segments: Vec<PathSpec>,
    },

    /// Pointwise product with the closed loop exp(2π·maslov·(t/T)·J₂) ⊕ I
    /// acting on the first coordinate pair.  The loop closes at t = T, so
    /// the endpoint is unchanged while every iteration index downstream
    /// shifts by 2·maslov.
    LoopMultiply {
        /// Signed number of turns the loop makes over [0, T].
        maslov: i64,
        /// The path being multiplied.
        base: Box<PathSpec>,
    },

    /// Extend a half-period path Γ on [0, T/2] to [0, T] by the rule
    /// Γ(t + T/2) = Γ(t)·Γ(T/2), the natural extension of a flow whose
    /// generator is T/2-periodic.
    HalfPeriodExtend {
        /// The half-period path.
        base: Box<PathSpec>,
    },
}

// ─── tests ───────────────────────────────────────────────────────────────

//! Exact evaluators behind realized paths.
//!
//! A [`Kernel`] is an expression tree mirroring [`crate::PathBody`],
//! augmented with evaluator closures and cached integration data.  It
//! answers two queries at arbitrary times t ∈ [0, duration]:
//!
//! * `frame_at(t)` — the group element Γ(t),
//! * `gen_at(t)` — the symmetric generator A(t) with Γ̇ = J·A(t)·Γ.
//!
//! Composites push both queries down to their children through the exact
//! group-level rules rather than resampling, so downstream consumers can
//! refine crossings to integration accuracy:
//!
//! * product:        Γ = Γ₁·Γ₂ has A = A₁ + Γ₁⁻ᵀ·A₂·Γ₁⁻¹,
//! * inverse:        Γ⁻¹ has A = −Γᵀ·A·Γ,
//! * iterate:        Γ(jT + s) = Γ(s)·Γ(T)^j, generator T-periodic,
//! * concatenation:  Γ(offset_j + s) = Γ_j(s)·(prefix of earlier endpoints),
//! * loop multiply:  left-multiplication by the closed rotation loop on
//!   the first coordinate pair,
//! * half extension: Γ(t + T/2) = Γ(t)·Γ(T/2).

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use sympl_core::standard_j;

use crate::integrate::DenseFlow;

/// Shared evaluator for a symmetric generator t ↦ A(t).
pub(crate) type AFn = Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>;

/// Shared evaluator for a frame t ↦ Γ(t).
pub(crate) type FrameFn = Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>;

/// Evaluator tree for a realized path.
#[derive(Clone)]
pub(crate) enum Kernel {
    /// Γ(t) = exp(2π·weight·t·J₂).
    Rotation { weight: f64 },
    /// Γ(t) = [[1, slope·t], [0, 1]].
    Shear { slope: f64 },
    /// Integrated flow of a sampled/interpolated generator; `knots` are
    /// the interior C⁰ corners of the interpolant.
    GenOde {
        gen: AFn,
        dim_half: usize,
        flow: DenseFlow,
        knots: Vec<f64>,
    },
    /// Closed-form frame and generator supplied by the caller.
    Exact {
        frame: FrameFn,
        gen: AFn,
        dim_half: usize,
    },
    /// Block-diagonal juxtaposition.
    DirectSum { children: Vec<Kernel> },
    /// Pointwise product t ↦ L(t)·R(t).
    Product { left: Box<Kernel>, right: Box<Kernel> },
    /// k-fold iterate; `powers[j]` caches Γ(T)^j for j = 0, …, k.
    Iterate {
        base: Box<Kernel>,
        base_duration: f64,
        powers: Vec<DMatrix<f64>>,
    },
    /// Pointwise group inverse.
    Inverse { base: Box<Kernel> },
    /// Segments run back to back; `offsets[j]` is segment j's start time
    /// and `prefixes[j]` the product of all earlier endpoints.
    Concat {
        segments: Vec<(Kernel, f64)>,
        offsets: Vec<f64>,
        prefixes: Vec<DMatrix<f64>>,
    },
    /// Left-multiplication by the closed loop exp(2π·maslov·(t/T)·J₂) ⊕ I.
    LoopMul {
        maslov: i64,
        duration: f64,
        base: Box<Kernel>,
    },
    /// Γ on [0, T/2] extended by Γ(t + T/2) = Γ(t)·Γ(T/2).
    HalfExtend {
        base: Box<Kernel>,
        half: f64,
        anchor: DMatrix<f64>,
    },
}

/// Rotation by φ on the first coordinate pair, identity elsewhere.
fn embed_rotation(dim_half: usize, phi: f64) -> DMatrix<f64> {
    let (s, c) = phi.sin_cos();
    let mut m = DMatrix::identity(2 * dim_half, 2 * dim_half);
    m[(0, 0)] = c;
    m[(0, 1)] = s;
    m[(1, 0)] = -s;
    m[(1, 1)] = c;
    m
}

/// Group inverse −J·Mᵀ·J of a symplectic frame.
fn symplectic_inverse(m: &DMatrix<f64>, j: &DMatrix<f64>) -> DMatrix<f64> {
    -(j * m.transpose() * j)
}

impl Kernel {
    /// Number of coordinate pairs n.
    pub(crate) fn dim_half(&self) -> usize {
        match self {
            Kernel::Rotation { .. } | Kernel::Shear { .. } => 1,
            Kernel::GenOde { dim_half, .. } | Kernel::Exact { dim_half, .. } => *dim_half,
            Kernel::DirectSum { children } => children.iter().map(Kernel::dim_half).sum(),
            Kernel::Product { left, .. } => left.dim_half(),
            Kernel::Iterate { base, .. }
            | Kernel::Inverse { base }
            | Kernel::LoopMul { base, .. }
            | Kernel::HalfExtend { base, .. } => base.dim_half(),
            Kernel::Concat { segments, .. } => segments[0].0.dim_half(),
        }
    }

    /// The frame Γ(t).  Callers keep t inside [0, duration]; tiny
    /// excursions from rounding are tolerated by every evaluator.
    pub(crate) fn frame_at(&self, t: f64) -> DMatrix<f64> {
        match self {
            Kernel::Rotation { weight } => {
                let (s, c) = (2.0 * std::f64::consts::PI * weight * t).sin_cos();
                DMatrix::from_row_slice(2, 2, &[c, s, -s, c])
            }
            Kernel::Shear { slope } => {
                DMatrix::from_row_slice(2, 2, &[1.0, slope * t, 0.0, 1.0])
            }
            Kernel::GenOde { gen, flow, .. } => flow.eval_with(&|s| gen(s), t),
            Kernel::Exact { frame, .. } => frame(t),
            Kernel::DirectSum { children } => {
                let dim = 2 * self.dim_half();
                let mut m = DMatrix::zeros(dim, dim);
                let mut at = 0;
                for child in children {
                    let d = 2 * child.dim_half();
                    m.view_mut((at, at), (d, d)).copy_from(&child.frame_at(t));
                    at += d;
                }
                m
            }
            Kernel::Product { left, right } => left.frame_at(t) * right.frame_at(t),
            Kernel::Iterate {
                base,
                base_duration,
                powers,
            } => {
                let (j, s) = split_periodic(t, *base_duration, powers.len() - 1);
                base.frame_at(s) * &powers[j]
            }
            Kernel::Inverse { base } => {
                let j = standard_j(self.dim_half());
                symplectic_inverse(&base.frame_at(t), &j)
            }
            Kernel::Concat {
                segments,
                offsets,
                prefixes,
            } => {
                let (j, s) = locate_segment(t, offsets);
                segments[j].0.frame_at(s) * &prefixes[j]
            }
            Kernel::LoopMul {
                maslov,
                duration,
                base,
            } => {
                let phi = 2.0 * std::f64::consts::PI * (*maslov as f64) * t / duration;
                embed_rotation(self.dim_half(), phi) * base.frame_at(t)
            }
            Kernel::HalfExtend { base, half, anchor } => {
                if t <= *half {
                    base.frame_at(t)
                } else {
                    base.frame_at((t - half).max(0.0)) * anchor
                }
            }
        }
    }

    /// The symmetric generator A(t) with Γ̇ = J·A(t)·Γ.
    pub(crate) fn gen_at(&self, t: f64) -> DMatrix<f64> {
        match self {
            Kernel::Rotation { weight } => {
                DMatrix::from_diagonal_element(2, 2, 2.0 * std::f64::consts::PI * weight)
            }
            Kernel::Shear { slope } => DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, *slope]),
            Kernel::GenOde { gen, .. } | Kernel::Exact { gen, .. } => gen(t),
            Kernel::DirectSum { children } => {
                let dim = 2 * self.dim_half();
                let mut m = DMatrix::zeros(dim, dim);
                let mut at = 0;
                for child in children {
                    let d = 2 * child.dim_half();
                    m.view_mut((at, at), (d, d)).copy_from(&child.gen_at(t));
                    at += d;
                }
                m
            }
            Kernel::Product { left, right } => {
                // A = A₁ + Γ₁⁻ᵀ·A₂·Γ₁⁻¹ with Γ₁⁻ᵀ = −J·Γ₁·J.
                let j = standard_j(self.dim_half());
                let inv_t = -(&j * left.frame_at(t) * &j);
                left.gen_at(t) + &inv_t * right.gen_at(t) * inv_t.transpose()
            }
            Kernel::Iterate {
                base,
                base_duration,
                powers,
            } => {
                let (_, s) = split_periodic(t, *base_duration, powers.len() - 1);
                base.gen_at(s)
            }
            Kernel::Inverse { base } => {
                let frame = base.frame_at(t);
                -(frame.transpose() * base.gen_at(t) * frame)
            }
            Kernel::Concat { segments, offsets, .. } => {
                let (j, s) = locate_segment(t, offsets);
                segments[j].0.gen_at(s)
            }
            Kernel::LoopMul {
                maslov,
                duration,
                base,
            } => {
                let n = self.dim_half();
                let rate = 2.0 * std::f64::consts::PI * (*maslov as f64) / duration;
                let phi = rate * t;
                let loop_frame = embed_rotation(n, phi);
                let mut a = &loop_frame * base.gen_at(t) * loop_frame.transpose();
                a[(0, 0)] += rate;
                a[(1, 1)] += rate;
                a
            }
            Kernel::HalfExtend { base, half, .. } => {
                if t <= *half {
                    base.gen_at(t)
                } else {
                    base.gen_at((t - half).max(0.0))
                }
            }
        }
    }

    /// Collect the times (shifted by `t0`) where the generator may lose
    /// smoothness: interpolation corners, concatenation seams, iterate
    /// and half-extension period boundaries.  Integrators downstream clip
    /// steps at these times so their error estimates stay valid.
    pub(crate) fn knots_into(&self, t0: f64, out: &mut Vec<f64>) {
        match self {
            Kernel::Rotation { .. } | Kernel::Shear { .. } | Kernel::Exact { .. } => {}
            Kernel::GenOde { knots, .. } => out.extend(knots.iter().map(|k| t0 + k)),
            Kernel::DirectSum { children } => {
                for child in children {
                    child.knots_into(t0, out);
                }
            }
            Kernel::Product { left, right } => {
                left.knots_into(t0, out);
                right.knots_into(t0, out);
            }
            Kernel::Iterate {
                base,
                base_duration,
                powers,
            } => {
                let k = powers.len() - 1;
                for j in 0..k {
                    let start = t0 + j as f64 * base_duration;
                    if j > 0 {
                        out.push(start);
                    }
                    base.knots_into(start, out);
                }
            }
            Kernel::Inverse { base } | Kernel::LoopMul { base, .. } => base.knots_into(t0, out),
            Kernel::Concat { segments, offsets, .. } => {
                for ((segment, _), &offset) in segments.iter().zip(offsets) {
                    if offset > 0.0 {
                        out.push(t0 + offset);
                    }
                    segment.knots_into(t0 + offset, out);
                }
            }
            Kernel::HalfExtend { base, half, .. } => {
                out.push(t0 + half);
                base.knots_into(t0, out);
                base.knots_into(t0 + half, out);
            }
        }
    }
}

/// Split t into (whole periods j, remainder s) against period T, robust
/// at period boundaries and clamped to j ≤ k.
fn split_periodic(t: f64, period: f64, k: usize) -> (usize, f64) {
    let mut j = ((t / period).floor().max(0.0) as usize).min(k);
    let mut s = t - j as f64 * period;
    if s < 0.0 {
        // Rounding put t barely below a period boundary.
        if j > 0 {
            j -= 1;
            s = t - j as f64 * period;
        } else {
            s = 0.0;
        }
    }
    (j, s)
}

/// Find the concatenation segment containing t; returns (index, local time).
fn locate_segment(t: f64, offsets: &[f64]) -> (usize, f64) {
    // offsets has one entry per segment (its start time); the final
    // segment absorbs t = total duration.
    let j = offsets
        .partition_point(|&o| o <= t)
        .saturating_sub(1)
        .min(offsets.len() - 1);
    (j, (t - offsets[j]).max(0.0))
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Rotation { weight } => write!(f, "Rotation(weight={weight})"),
            Kernel::Shear { slope } => write!(f, "Shear(slope={slope})"),
            Kernel::GenOde { dim_half, .. } => write!(f, "GenOde(n={dim_half})"),
            Kernel::Exact { dim_half, .. } => write!(f, "Exact(n={dim_half})"),
            Kernel::DirectSum { children } => f.debug_list().entries(children.iter()).finish(),
            Kernel::Product { left, right } => write!(f, "Product({left:?}, {right:?})"),
            Kernel::Iterate { base, powers, .. } => {
                write!(f, "Iterate({base:?}, k={})", powers.len() - 1)
            }
            Kernel::Inverse { base } => write!(f, "Inverse({base:?})"),
            Kernel::Concat { segments, .. } => {
                write!(f, "Concat(segments={})", segments.len())
            }
            Kernel::LoopMul { maslov, base, .. } => {
                write!(f, "LoopMul(maslov={maslov}, {base:?})")
            }
            Kernel::HalfExtend { base, .. } => write!(f, "HalfExtend({base:?})"),
        }
    }
}

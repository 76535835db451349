//! Realized symplectic paths.
//!
//! [`SymplecticPath`] pairs an exact evaluator tree with a uniformly
//! sampled trace of frames and generators.  Realization validates the
//! structural relations of the description, integrates any sampled
//! generators once, and then runs three health checks over the sample
//! grid:
//!
//! * **symplecticity budget** — each sampled frame must satisfy
//!   ‖ΓᵀJΓ − J‖ ≤ 10⁻⁸ per unit time,
//! * **continuity guard** — consecutive samples may not jump by more
//!   than half the current frame scale (wild inputs fail loudly instead
//!   of producing garbage indices),
//! * **spot ODE residual** — at a handful of interior times, a central
//!   difference of the frame is compared against J·A(t)·Γ(t), tying the
//!   generator evaluators to the frame evaluators they claim to solve.

use nalgebra::DMatrix;
use sympl_core::{standard_j, SymplecticMatrix};

use crate::error::PathError;
use crate::integrate::{integrate_flow, DRIFT_PER_UNIT};
use crate::kernel::Kernel;
use crate::spec::{PathBody, PathSpec};

/// Default sampling density (samples per unit time) used by the CLI and
/// by convenience constructors when no explicit resolution is given.
pub const DEFAULT_RESOLUTION: f64 = 2048.0;

/// Relative slack for duration bookkeeping inside descriptions.
const DURATION_TOL: f64 = 1e-12;

/// Scale factor of the spot ODE-residual tolerance.
const SPOT_TOL_FACTOR: f64 = 1e-5;

/// Interior sample fractions for the spot ODE check, chosen away from
/// the rational times where composite generators may have corners.
const SPOT_FRACTIONS: [f64; 5] = [0.123_456_789_1, 0.314_159_265_3, 0.577_215_664_9, 0.718_281_828_4, 0.912_870_929_1];

// ─── realized path ───────────────────────────────────────────────────────

/// A realized path in Sp(2n): exact evaluators plus a sampled trace.
#[derive(Clone, Debug)]
pub struct SymplecticPath {
    dim_half: usize,
    duration: f64,
    resolution: f64,
    kernel: Kernel,
    samples: Vec<(f64, SymplecticMatrix)>,
    generator_samples: Vec<(f64, DMatrix<f64>)>,
    endpoint: SymplecticMatrix,
}

impl SymplecticPath {
    /// Number of coordinate pairs n.
    #[must_use]
    pub fn dim_half(&self) -> usize {
        self.dim_half
    }

    /// Total time span.
    #[must_use]
    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// Sampling density (samples per unit time) this path was built with.
    #[must_use]
    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    /// The frame Γ(t), evaluated exactly (closed forms and group rules,
    /// or dense-flow refinement for integrated generators).
    #[must_use]
    pub fn frame(&self, t: f64) -> DMatrix<f64> {
        self.kernel.frame_at(self.clamp(t))
    }

    /// The symmetric generator A(t) with Γ̇ = J·A(t)·Γ.
    #[must_use]
    pub fn generator(&self, t: f64) -> DMatrix<f64> {
        self.kernel.gen_at(self.clamp(t))
    }

    /// The terminal frame Γ(duration).
    #[must_use]
    pub fn endpoint(&self) -> &SymplecticMatrix {
        &self.endpoint
    }

    /// The uniformly sampled frames, including both endpoints.
    #[must_use]
    pub fn samples(&self) -> &[(f64, SymplecticMatrix)] {
        &self.samples
    }

    /// Generator samples on the same grid as [`Self::samples`].
    #[must_use]
    pub fn generator_samples(&self) -> &[(f64, DMatrix<f64>)] {
        &self.generator_samples
    }

    /// Interior times where the generator may lose smoothness
    /// (interpolation corners, concatenation seams, iterate boundaries),
    /// sorted and deduplicated.  Integrators re-driving this path clip
    /// their steps here so local error estimates stay valid.
    #[must_use]
    pub fn generator_knots(&self) -> Vec<f64> {
        let mut knots = Vec::new();
        self.kernel.knots_into(0.0, &mut knots);
        knots.retain(|&t| t > 0.0 && t < self.duration);
        knots.sort_by(|a, b| a.partial_cmp(b).expect("knots are finite"));
        let merge = 1e-12 * (1.0 + self.duration);
        knots.dedup_by(|a, b| (*a - *b).abs() <= merge);
        knots
    }

    fn clamp(&self, t: f64) -> f64 {
        let slack = 1e-9 * (1.0 + self.duration);
        assert!(
            (-slack..=self.duration + slack).contains(&t),
            "time {t} outside path domain [0, {}]",
            self.duration
        );
        t.clamp(0.0, self.duration)
    }

    // ── constructors ──────────────────────────────────────────────────

    /// The planar rotation flow exp(2π·weight·t·J₂).
    pub fn rotation(weight: f64, duration: f64, resolution: f64) -> Result<Self, PathError> {
        finalize(Kernel::Rotation { weight }, duration, resolution)
    }

    /// The planar shear [[1, slope·t], [0, 1]].
    pub fn shear(slope: f64, duration: f64, resolution: f64) -> Result<Self, PathError> {
        finalize(Kernel::Shear { slope }, duration, resolution)
    }

    /// The constant identity path in Sp(2n).
    pub fn constant_identity(
        dim_half: usize,
        duration: f64,
        resolution: f64,
    ) -> Result<Self, PathError> {
        if dim_half == 0 {
            return Err(PathError::BadSpec {
                detail: "constant path needs at least one coordinate pair".into(),
            });
        }
        let children = vec![Kernel::Rotation { weight: 0.0 }; dim_half];
        finalize(Kernel::DirectSum { children }, duration, resolution)
    }

    /// Integrate a programmatic generator t ↦ A(t) (symmetric) into a
    /// path.  For generators with known closed-form frames prefer
    /// [`Self::from_exact_parts`], which skips integration entirely.
    pub fn from_generator_fn(
        gen: impl Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
        dim_half: usize,
        duration: f64,
        resolution: f64,
    ) -> Result<Self, PathError> {
        let flow = integrate_flow(&gen, dim_half, duration, &[])?;
        let kernel = Kernel::GenOde {
            gen: std::sync::Arc::new(gen),
            dim_half,
            flow,
            knots: Vec::new(),
        };
        finalize(kernel, duration, resolution)
    }

    /// Wrap a closed-form frame/generator pair.  The realization checks
    /// (symplecticity, continuity, spot ODE residual) are the only
    /// validation, so callers are responsible for genuine consistency.
    pub fn from_exact_parts(
        frame: impl Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
        gen: impl Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
        dim_half: usize,
        duration: f64,
        resolution: f64,
    ) -> Result<Self, PathError> {
        let kernel = Kernel::Exact {
            frame: std::sync::Arc::new(frame),
            gen: std::sync::Arc::new(gen),
            dim_half,
        };
        finalize(kernel, duration, resolution)
    }

    // ── operations ────────────────────────────────────────────────────

    /// The k-fold iterate on [0, k·duration].
    pub fn iterate(&self, k: u32) -> Result<Self, PathError> {
        if k == 0 {
            return Err(PathError::BadSpec {
                detail: "iterate needs k ≥ 1".into(),
            });
        }
        let kernel = iterate_kernel(self.kernel.clone(), self.duration, k);
        finalize(kernel, self.duration * f64::from(k), self.resolution)
    }

    /// The pointwise group inverse t ↦ Γ(t)⁻¹.
    pub fn inverse(&self) -> Result<Self, PathError> {
        finalize(
            Kernel::Inverse {
                base: Box::new(self.kernel.clone()),
            },
            self.duration,
            self.resolution,
        )
    }

    /// Left-multiply by the closed loop of the given winding on the
    /// first coordinate pair; the endpoint is unchanged.
    pub fn loop_multiply(&self, maslov: i64) -> Result<Self, PathError> {
        finalize(
            Kernel::LoopMul {
                maslov,
                duration: self.duration,
                base: Box::new(self.kernel.clone()),
            },
            self.duration,
            self.resolution,
        )
    }

    /// Extend to [0, 2·duration] by Γ(t + T) = Γ(t)·Γ(T).
    pub fn half_period_extend(&self) -> Result<Self, PathError> {
        let anchor = self.kernel.frame_at(self.duration);
        finalize(
            Kernel::HalfExtend {
                base: Box::new(self.kernel.clone()),
                half: self.duration,
                anchor,
            },
            2.0 * self.duration,
            self.resolution,
        )
    }

    /// Pointwise product t ↦ Γ(t)·Δ(t) of equal-duration paths in the
    /// same group.
    pub fn pointwise_product(&self, rhs: &Self) -> Result<Self, PathError> {
        if self.dim_half != rhs.dim_half {
            return Err(PathError::DimensionMismatch {
                expected: 2 * self.dim_half,
                got: 2 * rhs.dim_half,
            });
        }
        if !close(self.duration, rhs.duration) {
            return Err(PathError::BadSpec {
                detail: format!(
                    "pointwise product needs equal durations, got {} and {}",
                    self.duration, rhs.duration
                ),
            });
        }
        finalize(
            Kernel::Product {
                left: Box::new(self.kernel.clone()),
                right: Box::new(rhs.kernel.clone()),
            },
            self.duration,
            self.resolution.max(rhs.resolution),
        )
    }

    /// Block-diagonal juxtaposition of equal-duration paths.
    pub fn direct_sum(parts: &[&Self]) -> Result<Self, PathError> {
        if parts.is_empty() {
            return Err(PathError::BadSpec {
                detail: "direct sum needs at least one part".into(),
            });
        }
        let duration = parts[0].duration;
        let mut resolution: f64 = 0.0;
        for p in parts {
            if !close(p.duration, duration) {
                return Err(PathError::BadSpec {
                    detail: format!(
                        "direct sum needs equal durations, got {} and {}",
                        duration, p.duration
                    ),
                });
            }
            resolution = resolution.max(p.resolution);
        }
        let children = parts.iter().map(|p| p.kernel.clone()).collect();
        finalize(Kernel::DirectSum { children }, duration, resolution)
    }

    /// Run the parts one after another, each starting where the previous
    /// ended.
    pub fn concatenate(parts: &[&Self]) -> Result<Self, PathError> {
        if parts.is_empty() {
            return Err(PathError::BadSpec {
                detail: "concatenation needs at least one segment".into(),
            });
        }
        let dim_half = parts[0].dim_half;
        for p in parts {
            if p.dim_half != dim_half {
                return Err(PathError::DimensionMismatch {
                    expected: 2 * dim_half,
                    got: 2 * p.dim_half,
                });
            }
        }
        let kernel = concat_kernel(
            parts
                .iter()
                .map(|p| (p.kernel.clone(), p.duration))
                .collect(),
        );
        let duration = parts.iter().map(|p| p.duration).sum();
        let resolution = parts.iter().map(|p| p.resolution).fold(0.0, f64::max);
        finalize(kernel, duration, resolution)
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= DURATION_TOL * (1.0 + a.abs().max(b.abs()))
}

fn iterate_kernel(base: Kernel, base_duration: f64, k: u32) -> Kernel {
    let monodromy = base.frame_at(base_duration);
    let n = monodromy.nrows();
    let mut powers = Vec::with_capacity(k as usize + 1);
    powers.push(DMatrix::identity(n, n));
    for j in 1..=k as usize {
        powers.push(&powers[j - 1] * &monodromy);
    }
    Kernel::Iterate {
        base: Box::new(base),
        base_duration,
        powers,
    }
}

fn concat_kernel(segments: Vec<(Kernel, f64)>) -> Kernel {
    let n = 2 * segments[0].0.dim_half();
    let mut offsets = Vec::with_capacity(segments.len());
    let mut prefixes = Vec::with_capacity(segments.len());
    let mut at = 0.0;
    let mut acc = DMatrix::<f64>::identity(n, n);
    for (kernel, dur) in &segments {
        offsets.push(at);
        prefixes.push(acc.clone());
        acc = kernel.frame_at(*dur) * acc;
        at += dur;
    }
    Kernel::Concat {
        segments,
        offsets,
        prefixes,
    }
}

// ─── realization ─────────────────────────────────────────────────────────

/// Realize a description into a sampled path at the default resolution.
pub fn realize_default(spec: &PathSpec) -> Result<SymplecticPath, PathError> {
    realize(spec, DEFAULT_RESOLUTION)
}

/// Realize a description into a sampled path.
///
/// `resolution` is the sampling density in samples per unit time; the
/// grid always keeps at least 8 steps regardless of duration.  All
/// structural relations between durations are validated here, sampled
/// generators are integrated once, and the health checks described in
/// the module docs run over the realized grid.
pub fn realize(spec: &PathSpec, resolution: f64) -> Result<SymplecticPath, PathError> {
    let kernel = lower(spec)?;
    finalize(kernel, spec.duration, resolution)
}

/// Validate one description node and build its evaluator.
fn lower(spec: &PathSpec) -> Result<Kernel, PathError> {
    if !spec.duration.is_finite() || spec.duration <= 0.0 {
        return Err(PathError::BadSpec {
            detail: format!("duration must be positive and finite, got {}", spec.duration),
        });
    }
    let duration = spec.duration;
    match &spec.body {
        PathBody::RotationBlock { weight } => {
            if !weight.is_finite() {
                return Err(PathError::BadSpec {
                    detail: "rotation weight must be finite".into(),
                });
            }
            Ok(Kernel::Rotation { weight: *weight })
        }
        PathBody::ShearBlock { slope } => {
            if !slope.is_finite() {
                return Err(PathError::BadSpec {
                    detail: "shear slope must be finite".into(),
                });
            }
            Ok(Kernel::Shear { slope: *slope })
        }
        PathBody::GeneratorODE { grid, values } => lower_generator_ode(grid, values, duration),
        PathBody::DirectSum { children } => {
            if children.is_empty() {
                return Err(PathError::BadSpec {
                    detail: "direct sum needs at least one child".into(),
                });
            }
            let kernels = children
                .iter()
                .map(|child| {
                    if !close(child.duration, duration) {
                        return Err(PathError::BadSpec {
                            detail: format!(
                                "direct sum child duration {} differs from parent {}",
                                child.duration, duration
                            ),
                        });
                    }
                    lower(child)
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Kernel::DirectSum { children: kernels })
        }
        PathBody::Iterate { base, k } => {
            if *k == 0 {
                return Err(PathError::BadSpec {
                    detail: "iterate needs k ≥ 1".into(),
                });
            }
            if !close(duration, f64::from(*k) * base.duration) {
                return Err(PathError::BadSpec {
                    detail: format!(
                        "iterate duration {} is not k·base = {}·{}",
                        duration, k, base.duration
                    ),
                });
            }
            Ok(iterate_kernel(lower(base)?, base.duration, *k))
        }
        PathBody::Inverse { base } => {
            if !close(duration, base.duration) {
                return Err(PathError::BadSpec {
                    detail: format!(
                        "inverse duration {} differs from base {}",
                        duration, base.duration
                    ),
                });
            }
            Ok(Kernel::Inverse {
                base: Box::new(lower(base)?),
            })
        }
        PathBody::Concatenate { segments } => {
            if segments.is_empty() {
                return Err(PathError::BadSpec {
                    detail: "concatenation needs at least one segment".into(),
                });
            }
            let total: f64 = segments.iter().map(|s| s.duration).sum();
            if !close(duration, total) {
                return Err(PathError::BadSpec {
                    detail: format!(
                        "concatenation duration {duration} differs from segment sum {total}"
                    ),
                });
            }
            let lowered = segments
                .iter()
                .map(|seg| Ok((lower(seg)?, seg.duration)))
                .collect::<Result<Vec<_>, PathError>>()?;
            let dim = lowered[0].0.dim_half();
            for (kern, _) in &lowered {
                if kern.dim_half() != dim {
                    return Err(PathError::DimensionMismatch {
                        expected: 2 * dim,
                        got: 2 * kern.dim_half(),
                    });
                }
            }
            Ok(concat_kernel(lowered))
        }
        PathBody::LoopMultiply { maslov, base } => {
            if !close(duration, base.duration) {
                return Err(PathError::BadSpec {
                    detail: format!(
                        "loop multiply duration {} differs from base {}",
                        duration, base.duration
                    ),
                });
            }
            Ok(Kernel::LoopMul {
                maslov: *maslov,
                duration,
                base: Box::new(lower(base)?),
            })
        }
        PathBody::HalfPeriodExtend { base } => {
            if !close(duration, 2.0 * base.duration) {
                return Err(PathError::BadSpec {
                    detail: format!(
                        "half-period extension duration {} is not twice the base {}",
                        duration, base.duration
                    ),
                });
            }
            let kernel = lower(base)?;
            let anchor = kernel.frame_at(base.duration);
            Ok(Kernel::HalfExtend {
                base: Box::new(kernel),
                half: base.duration,
                anchor,
            })
        }
    }
}

fn lower_generator_ode(
    grid: &[f64],
    values: &[Vec<Vec<f64>>],
    duration: f64,
) -> Result<Kernel, PathError> {
    if grid.len() < 2 || grid.len() != values.len() {
        return Err(PathError::BadSpec {
            detail: format!(
                "generator grid needs ≥ 2 points matching the values ({} vs {})",
                grid.len(),
                values.len()
            ),
        });
    }
    let tol = DURATION_TOL * (1.0 + duration);
    if grid[0].abs() > tol || (grid[grid.len() - 1] - duration).abs() > tol {
        return Err(PathError::BadSpec {
            detail: "generator grid must span [0, duration]".into(),
        });
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(PathError::BadSpec {
            detail: "generator grid must be strictly increasing".into(),
        });
    }

    let dim = values[0].len();
    if dim == 0 || dim % 2 != 0 {
        return Err(PathError::BadSpec {
            detail: format!("generator matrices must be nonempty and even-sized, got {dim}"),
        });
    }
    let mut mats = Vec::with_capacity(values.len());
    for rows in values {
        if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
            return Err(PathError::BadSpec {
                detail: "generator matrices must all be square of equal size".into(),
            });
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        if flat.iter().any(|x| !x.is_finite()) {
            return Err(PathError::BadSpec {
                detail: "generator entries must be finite".into(),
            });
        }
        let m = DMatrix::from_row_slice(dim, dim, &flat);
        let asym = (&m - m.transpose()).amax();
        if asym > 1e-9 * (1.0 + m.amax()) {
            return Err(PathError::BadSpec {
                detail: format!("generator matrix is not symmetric (defect {asym:.3e})"),
            });
        }
        mats.push(m);
    }

    let mut knots = grid.to_vec();
    knots[0] = 0.0;
    let len = knots.len();
    knots[len - 1] = duration;

    let interp = {
        let knots = knots.clone();
        let mats = mats;
        move |t: f64| -> DMatrix<f64> {
            if t <= knots[0] {
                return mats[0].clone();
            }
            if t >= knots[len - 1] {
                return mats[len - 1].clone();
            }
            let i = knots.partition_point(|&k| k <= t) - 1;
            let lam = (t - knots[i]) / (knots[i + 1] - knots[i]);
            (1.0 - lam) * &mats[i] + lam * &mats[i + 1]
        }
    };
    let interior = knots[1..len - 1].to_vec();
    let flow = integrate_flow(&interp, dim / 2, duration, &interior)?;
    Ok(Kernel::GenOde {
        gen: std::sync::Arc::new(interp),
        dim_half: dim / 2,
        flow,
        knots: interior,
    })
}

/// Sample, check, and package a kernel into a realized path.
fn finalize(kernel: Kernel, duration: f64, resolution: f64) -> Result<SymplecticPath, PathError> {
    if !duration.is_finite() || duration <= 0.0 {
        return Err(PathError::BadSpec {
            detail: format!("duration must be positive and finite, got {duration}"),
        });
    }
    if !resolution.is_finite() || resolution <= 0.0 {
        return Err(PathError::BadSpec {
            detail: format!("resolution must be positive and finite, got {resolution}"),
        });
    }
    let dim_half = kernel.dim_half();
    let steps = ((resolution * duration).ceil() as usize).max(8);

    let mut samples = Vec::with_capacity(steps + 1);
    let mut generator_samples = Vec::with_capacity(steps + 1);
    let mut prev: Option<(f64, DMatrix<f64>)> = None;
    for i in 0..=steps {
        let t = duration * (i as f64 / steps as f64);
        let frame = kernel.frame_at(t);

        let drift = sympl_core::symplectic_defect(&frame);
        let budget = DRIFT_PER_UNIT * t.max(1.0);
        if drift > budget {
            return Err(PathError::DriftExceeded { drift, budget, t });
        }
        if let Some((t_prev, f_prev)) = &prev {
            let jump = (&frame - f_prev).amax();
            let guard = 0.5 * (1.0 + f_prev.amax());
            if jump > guard {
                return Err(PathError::ContinuityGuard {
                    t_prev: *t_prev,
                    t,
                    jump,
                    guard,
                });
            }
        }
        if i == 0 {
            let from_identity = (&frame - DMatrix::<f64>::identity(2 * dim_half, 2 * dim_half)).amax();
            if from_identity > 1e-9 {
                return Err(PathError::BadSpec {
                    detail: format!("path does not start at the identity (distance {from_identity:.3e})"),
                });
            }
        }

        generator_samples.push((t, kernel.gen_at(t)));
        prev = Some((t, frame.clone()));
        samples.push((t, SymplecticMatrix::new_unchecked(frame)));
    }

    spot_check_ode(&kernel, duration)?;

    let endpoint = samples[samples.len() - 1].1.clone();
    Ok(SymplecticPath {
        dim_half,
        duration,
        resolution,
        kernel,
        samples,
        generator_samples,
        endpoint,
    })
}

/// Central-difference consistency check between frames and generators.
fn spot_check_ode(kernel: &Kernel, duration: f64) -> Result<(), PathError> {
    let j = standard_j(kernel.dim_half());
    for frac in SPOT_FRACTIONS {
        let t = frac * duration;
        let a = kernel.gen_at(t);
        let frame = kernel.frame_at(t);
        let a_scale = 1.0 + a.amax();
        let h = (1e-5 / a_scale).min(0.4 * duration * (1.0 - frac).min(frac));
        let diff = (kernel.frame_at(t + h) - kernel.frame_at(t - h)) / (2.0 * h);
        let residual = (&diff - &j * &a * &frame).amax();
        let tol = SPOT_TOL_FACTOR * a_scale * (1.0 + frame.amax());
        if residual > tol {
            return Err(PathError::BadSpec {
                detail: format!(
                    "generator does not solve the frame ODE at t = {t:.6}: \
                     residual {residual:.3e} > {tol:.3e}"
                ),
            });
        }
    }
    Ok(())
}

// ─── tests ───────────────────────────────────────────────────────────────

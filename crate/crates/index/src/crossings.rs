//! Crossing detection and signature counting behind the z-index.
//!
//! For a path Γ: [0, T] → Sp(2n) and a unit-circle point z, the z-index
//! totals signed contributions of the crossing set {t : z ∈ spec Γ(t)}:
//!
//! > 𝓑(z) = ½·sig A(0) ⋅ [z = 1]  +  Σ_{t* ∈ (0,T)} sig Q(t*)  +  endpoint
//!
//! where Q(t*) = V*·A(t*)·V is the Hermitian crossing form on the complex
//! kernel V = ker(Γ(t*) − z·Id) and A is the path's symmetric generator.
//! Two callers share this scan:
//!
//! * the **direct tier** evaluates frames exactly (closed forms and group
//!   rules, no integration) and succeeds when every crossing is isolated
//!   and regular; an endpoint crossing contributes ½·sig − ν_z/2 —
//!   equivalently −(number of negative form eigenvalues) — which is the
//!   lower-semicontinuous convention;
//! * the **shifted tier** runs the same scan on the flow of A(t) − s·Id
//!   for a ladder of tiny s > 0.  The shift makes degenerate crossings
//!   regular for generic s and moves endpoint crossings off t = T in
//!   exactly the direction the lower-semicontinuous convention assigns
//!   (positively rotating kernel directions leave the window, negatively
//!   rotating ones enter it), so the shifted endpoint must simply be
//!   clear of z.
//!
//! Detection runs on a sampled grid through the real proxy
//! d(t) = Re(z⁻ⁿ·det(Γ(t) − z·Id)) — real up to rounding because the
//! characteristic polynomial of a symplectic matrix is reciprocal.  |d|
//! has enormous dynamic range (it is a product of eigenvalue gaps), so
//! nodes where it sinks below the determinant noise floor are classified
//! by σ_min(Γ(t) − z·Id) instead: clear nodes carry no crossing and no
//! trustworthy sign, hot nodes are crossing candidates.  Sign changes
//! between trustworthy nodes catch odd crossings, dips of |d| catch
//! tangential ones, hot nodes catch everything the determinant cannot
//! see.  Candidates are resolved by subdividing the bracket, locating
//! σ_min minima, and golden-section refinement; each confirmed crossing
//! must present an unambiguous kernel and a nondegenerate form, otherwise
//! the scan reports a bail instead of guessing.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;

type C64 = Complex<f64>;

// ─── protocol constants ──────────────────────────────────────────────────

/// Minimum detection samples per unit time.
pub(crate) const DETECT_PER_UNIT: f64 = 256.0;

/// Singular values below this (× frame scale) count as kernel directions.
const KERNEL_FACTOR: f64 = 1e-8;

/// Singular values above this (× frame scale) count as clearly nonzero;
/// the band in between is ambiguous and forces a bail.
const CLEAR_FACTOR: f64 = 1e-6;

/// Crossing-form eigenvalues within this (× generator scale) of zero make
/// the form degenerate.  Kernel bases are located to width ~1e-11, so the
/// contamination in a form eigenvalue is ≲1e-10 × generator scale; the band
/// must also sit well below the smallest regularizing shift (1e-7) so that
/// shifted forms register as definite.
const FORM_FACTOR: f64 = 1e-9;

/// Normalized |d| below this is inside the determinant noise floor; the
/// node's sign is untrustworthy and σ_min or the eigenvalue distance
/// decides its role.
const ZERO_D_TOL: f64 = 1e-11;

/// A point whose distance to the frame's spectrum is at least this is
/// certainly not being crossed.  σ_min under-reports the spectral distance
/// quadratically near non-semisimple eigenvalues (a Jordan pair at angular
/// distance δ has σ_min ~ δ², far below the kernel band long before z is
/// actually reached), so this arbiter rescues nodes that defective
/// proximity would otherwise push into the ambiguity band.  Computed
/// eigenvalues of a size-k Jordan structure carry ~eps^(1/k) noise:
/// ≤ 6e-6 for k ≤ 3 and ~1e-4 for k = 4, the largest single-point
/// structure the path builders produce, so a genuine crossing cannot
/// measure as clear at this threshold.
const EIG_CLEAR_TOL: f64 = 1e-4;

/// Normalized |d| below this marks the structural departure window around
/// t = 0 (for z = 1) and the approach window before a degenerate
/// endpoint.
const ESCAPE_TOL: f64 = 1e-9;

/// Local minima of normalized |d| below this become dip candidates.
const DIP_FACTOR: f64 = 1e-4;

/// Subdivision count at the top level of bracket resolution.
const SUBDIVISIONS: usize = 48;

/// Subdivision count at the refinement levels of bracket resolution.
const FINE_POINTS: usize = 128;

/// Refinement levels below the top subdivision; the bottom level hands
/// each seeded window to golden-section search.
const RESOLVE_DEPTH: usize = 2;

/// Cap on seeded σ-minima per resolution level; more is noise.
const MAX_SEEDS: usize = 8;

/// Golden-section width target, × (1 + duration).
const WIDTH_FACTOR: f64 = 1e-11;

/// Crossings closer than this (× (1 + duration)) merge into one.
const DEDUP_FACTOR: f64 = 1e-9;

/// Regularizing shifts of the shifted tier.  At least two must succeed
/// and every success must agree; a single shift may abstain when its
/// displaced endpoint spectrum happens to collide with the query point.
pub(crate) const S_SHIFTS: [f64; 3] = [1e-5, 1e-6, 1e-7];

/// Hard cap on candidate brackets per scan; beyond it the data is noise.
const MAX_CANDIDATES: usize = 64;

// ─── small complex-linear-algebra helpers ────────────────────────────────

/// M − z·Id over ℂ.
fn complex_shift(m: &DMatrix<f64>, z: C64) -> DMatrix<C64> {
    let mut out = m.map(|x| C64::new(x, 0.0));
    let k = out.nrows();
    for i in 0..k {
        out[(i, i)] -= z;
    }
    out
}

/// The real crossing proxy d(t) = Re(z⁻ⁿ·det(Γ − z·Id)), which vanishes
/// exactly on the crossing set.
pub(crate) fn d_value(frame: &DMatrix<f64>, z: C64) -> f64 {
    let n = frame.nrows() / 2;
    let det = complex_shift(frame, z).lu().determinant();
    (det * z.powi(-(n as i32))).re
}

/// σ_min(Γ − z·Id).
pub(crate) fn sigma_min(frame: &DMatrix<f64>, z: C64) -> f64 {
    let sv = complex_shift(frame, z).svd(false, false).singular_values;
    sv.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Distance from z to the spectrum of the frame.  Unlike σ_min this does
/// not collapse quadratically near defective eigenvalues; see
/// [`EIG_CLEAR_TOL`] for the noise floor it is judged against.
fn eigen_distance(frame: &DMatrix<f64>, z: C64) -> f64 {
    frame
        .complex_eigenvalues()
        .iter()
        .map(|lam| (lam - z).norm())
        .fold(f64::INFINITY, f64::min)
}

/// Kernel data of Γ − z·Id, split at the singular-value tolerance bands.
pub(crate) struct CrossingKernel {
    /// Number of singular values below the kernel threshold.
    pub dim: usize,
    /// Orthonormal kernel basis, rows × dim.
    pub basis: DMatrix<C64>,
    /// Whether the smallest non-kernel singular value clears the
    /// ambiguity band.
    pub sep_ok: bool,
}

pub(crate) fn crossing_kernel(frame: &DMatrix<f64>, z: C64, scale: f64) -> CrossingKernel {
    let shifted = complex_shift(frame, z);
    let dim_total = shifted.nrows();
    let mut svd = shifted.svd(false, true);
    svd.sort_by_singular_values(); // descending
    let sv = &svd.singular_values;
    let ker_tol = KERNEL_FACTOR * scale;
    let clear_tol = CLEAR_FACTOR * scale;
    let dim = sv.iter().filter(|&&s| s <= ker_tol).count();
    let sep_ok = if dim == dim_total {
        true
    } else {
        sv[dim_total - dim - 1] >= clear_tol
    };
    let v_t = svd.v_t.expect("singular vectors requested");
    let basis = v_t.rows(dim_total - dim, dim).adjoint();
    CrossingKernel { dim, basis, sep_ok }
}

/// Inertia (positive, negative, null) of the Hermitian crossing form
/// V*·A·V at eigenvalue tolerance `zero_tol`.
pub(crate) fn crossing_form_inertia(
    a: &DMatrix<f64>,
    basis: &DMatrix<C64>,
    zero_tol: f64,
) -> (usize, usize, usize) {
    let a_c = a.map(|x| C64::new(x, 0.0));
    let q = basis.adjoint() * a_c * basis;
    let eig = SymmetricEigen::new(q);
    inertia_of(eig.eigenvalues.iter().copied(), zero_tol)
}

/// Inertia of a real symmetric matrix at eigenvalue tolerance `zero_tol`.
fn symmetric_inertia(a: &DMatrix<f64>, zero_tol: f64) -> (usize, usize, usize) {
    let eig = SymmetricEigen::new(a.clone());
    inertia_of(eig.eigenvalues.iter().copied(), zero_tol)
}

fn inertia_of(eigs: impl Iterator<Item = f64>, zero_tol: f64) -> (usize, usize, usize) {
    let mut pos = 0;
    let mut neg = 0;
    let mut zero = 0;
    for lam in eigs {
        if lam > zero_tol {
            pos += 1;
        } else if lam < -zero_tol {
            neg += 1;
        } else {
            zero += 1;
        }
    }
    (pos, neg, zero)
}

// ─── scan interface ──────────────────────────────────────────────────────

/// A sampled detection trace: frames at increasing times covering
/// [0, duration], plus precomputed magnitude scales.
pub(crate) struct DetectionGrid {
    pub times: Vec<f64>,
    pub frames: Vec<DMatrix<f64>>,
    /// 1 + max‖Γ‖ over the grid.
    pub scale: f64,
    /// 1 + max‖A‖ over the generator trace.
    pub ascale: f64,
}

impl DetectionGrid {
    pub(crate) fn new(times: Vec<f64>, frames: Vec<DMatrix<f64>>, ascale: f64) -> Self {
        let scale = 1.0 + frames.iter().map(DMatrix::amax).fold(0.0, f64::max);
        Self {
            times,
            frames,
            scale,
            ascale,
        }
    }
}

/// How the scan treats the endpoint t = T.
pub(crate) enum EndpointRule {
    /// z is an endpoint eigenvalue of multiplicity ν: count the terminal
    /// crossing as ½·sig − ν/2 = −(negative form eigenvalues).
    HalfCount { nu_end: usize },
    /// z must not be an endpoint eigenvalue.  With `certified` the caller
    /// vouches for that from the endpoint spectrum itself (the direct tier
    /// pins cluster locations to far better accuracy than any singular-value
    /// test), and the scan skips the endpoint kernel check — essential for
    /// defective endpoints, where σ_min dips into the ambiguity band while
    /// z is still a whole spectral gap away.  Without it the endpoint must
    /// show an empty kernel at kernel tolerance.
    MustClear { certified: bool },
}

/// Outcome of one scan: a value, or a bail explaining why this tier
/// cannot decide.
pub(crate) enum ScanOutcome {
    Value(i64),
    Bail { t: f64, reason: String },
}

use ScanOutcome::{Bail, Value};

/// Everything a scan needs to evaluate the path exactly between grid
/// nodes.
pub(crate) struct ScanInputs<'a> {
    pub grid: &'a DetectionGrid,
    pub eval: &'a dyn Fn(f64) -> DMatrix<f64>,
    pub gen: &'a dyn Fn(f64) -> DMatrix<f64>,
    pub duration: f64,
    /// Generator discontinuity times; crossings landing on one get both
    /// one-sided forms compared.
    pub knots: &'a [f64],
}

/// Role of one grid node in candidate detection.
#[derive(Clone, Copy, PartialEq)]
enum NodeClass {
    /// |d̂| above the noise floor: the sign is trustworthy.
    Clean,
    /// |d̂| in the noise floor but σ_min clears the ambiguity band: no
    /// crossing here, no usable sign.
    TinyClear,
    /// |d̂| in the noise floor and σ_min small: crossing candidate.
    TinyHot,
}

/// Count the z-index contributions along the grid.  `at_one` marks the
/// structural crossing of z = 1 at t = 0 (every path starts at the
/// identity), which contributes ½·sig A(0) and owns a departure window
/// excluded from interior detection.
pub(crate) fn z_index_scan(
    inp: &ScanInputs<'_>,
    z: C64,
    at_one: bool,
    rule: &EndpointRule,
) -> ScanOutcome {
    let grid = inp.grid;
    let len = grid.times.len();
    let dim = grid.frames[0].nrows();
    let d_norm = grid.scale.powi(dim as i32);
    let form_tol = FORM_FACTOR * grid.ascale;
    let clear_tol = CLEAR_FACTOR * grid.scale;
    let width_tol = WIDTH_FACTOR * (1.0 + inp.duration);
    let dedup_tol = DEDUP_FACTOR * (1.0 + inp.duration);

    let dhat: Vec<f64> = grid
        .frames
        .iter()
        .map(|f| d_value(f, z) / d_norm)
        .collect();

    let mut total: i64 = 0;

    // ── initial term and departure window (z = 1 only) ──
    let mut start = 0;
    if at_one {
        let a0 = (inp.gen)(0.0);
        let (pos, neg, zero) = symmetric_inertia(&a0, form_tol);
        if zero > 0 {
            return Bail {
                t: 0.0,
                reason: "degenerate initial crossing form".into(),
            };
        }
        total += (pos as i64 - neg as i64) / 2;

        // Walk through the polynomial tangency d ~ t^{2n}·det A(0) until
        // the determinant proxy stands above the noise floor.
        let mut i = 1;
        while i < len && dhat[i].abs() <= ESCAPE_TOL {
            i += 1;
        }

        // The window is opaque to d̂ but not to σ: resolve every σ-root it
        // hides.  The structural zero at t = 0 re-emerges as a root within
        // refinement width of 0 and is discarded; anything farther in is a
        // genuine crossing.  An indefinite A(0) routinely produces one —
        // the leading t^{2n}·det A(0) term and the next correction can
        // carry opposite signs, forcing an eigenvalue pair flung off z = 1
        // straight back through it (an elliptic/hyperbolic transition)
        // while d̂ is still orders below any trustworthy threshold.
        let w_hi = if i < len { grid.times[i] } else { inp.duration };
        let window = match resolve_bracket(inp, z, 0.0, w_hi, grid.scale, width_tol) {
            Ok(ts) => ts,
            Err(reason) => {
                return Bail {
                    t: 0.5 * w_hi,
                    reason,
                };
            }
        };
        let genuine: Vec<f64> = window.into_iter().filter(|&t| t > dedup_tol).collect();
        let (delta, odd_kernels) = match count_resolved_roots(inp, z, &genuine, form_tol) {
            Ok(c) => c,
            Err((t, reason)) => return Bail { t, reason },
        };
        total += delta;

        if i == len {
            // The proxy never re-emerges from the noise floor; with the
            // whole span σ-resolved above, a clear endpoint certifies the
            // count is complete.
            return match rule {
                EndpointRule::MustClear { certified } => {
                    let clear = *certified
                        || crossing_kernel(&grid.frames[len - 1], z, grid.scale).dim == 0;
                    if clear {
                        Value(total)
                    } else {
                        Bail {
                            t: inp.duration,
                            reason: "endpoint not clear of z after a full-span departure window"
                                .into(),
                        }
                    }
                }
                EndpointRule::HalfCount { .. } => Bail {
                    t: inp.duration,
                    reason: "path never separates from the initial crossing".into(),
                },
            };
        }
        // Sign audit: leaving the tangency, d̂ carries sign
        // (−1)^{negative count of A(0)}, and every odd-kernel crossing
        // inside the window flips it exactly once.
        let mut expected_sign = if neg % 2 == 0 { 1.0 } else { -1.0 };
        if odd_kernels % 2 == 1 {
            expected_sign = -expected_sign;
        }
        if dhat[i] * expected_sign < 0.0 {
            return Bail {
                t: grid.times[i],
                reason: "determinant sign leaving the departure window disagrees with its \
                         resolved crossings"
                    .into(),
            };
        }
        start = i;
    }

    // ── endpoint handling ──
    let mut end = len - 1;
    match rule {
        EndpointRule::HalfCount { nu_end } => {
            let mut j = len - 1;
            while j > start && dhat[j].abs() <= ESCAPE_TOL {
                j -= 1;
            }
            if j <= start {
                return Bail {
                    t: grid.times[j],
                    reason: "endpoint approach window swallows the whole path".into(),
                };
            }
            // Mirror of the departure window: σ-resolve the approach zone,
            // discard the structural root at t = T, and count whatever
            // genuine crossings hide under the noise floor on the way in.
            if grid.times[j] < inp.duration {
                let roots =
                    match resolve_bracket(inp, z, grid.times[j], inp.duration, grid.scale, width_tol)
                    {
                        Ok(ts) => ts,
                        Err(reason) => {
                            return Bail {
                                t: 0.5 * (grid.times[j] + inp.duration),
                                reason,
                            };
                        }
                    };
                let genuine: Vec<f64> = roots
                    .into_iter()
                    .filter(|&t| t < inp.duration - dedup_tol)
                    .collect();
                let (delta, _) = match count_resolved_roots(inp, z, &genuine, form_tol) {
                    Ok(c) => c,
                    Err((t, reason)) => return Bail { t, reason },
                };
                total += delta;
            }
            end = j;

            let ker = crossing_kernel(&grid.frames[len - 1], z, grid.scale);
            if !ker.sep_ok {
                return Bail {
                    t: inp.duration,
                    reason: "ambiguous endpoint kernel".into(),
                };
            }
            if ker.dim != *nu_end {
                return Bail {
                    t: inp.duration,
                    reason: format!(
                        "endpoint kernel dimension {} disagrees with spectrum ν = {nu_end}",
                        ker.dim
                    ),
                };
            }
            let (_, neg, zero) =
                crossing_form_inertia(&(inp.gen)(inp.duration), &ker.basis, form_tol);
            if zero > 0 {
                return Bail {
                    t: inp.duration,
                    reason: "degenerate endpoint crossing form".into(),
                };
            }
            total -= neg as i64;
        }
        EndpointRule::MustClear { certified } => {
            if !*certified && crossing_kernel(&grid.frames[len - 1], z, grid.scale).dim != 0 {
                return Bail {
                    t: inp.duration,
                    reason: "endpoint not clear of z".into(),
                };
            }
        }
    }

    // ── node classification over [start, end] ──
    let classes: Vec<NodeClass> = (start..=end)
        .map(|i| {
            if dhat[i].abs() > ZERO_D_TOL {
                NodeClass::Clean
            } else if sigma_min(&grid.frames[i], z) >= clear_tol
                || eigen_distance(&grid.frames[i], z) >= EIG_CLEAR_TOL
            {
                NodeClass::TinyClear
            } else {
                NodeClass::TinyHot
            }
        })
        .collect();
    let class = |i: usize| classes[i - start];

    // ── candidate brackets ──
    let mut brackets: Vec<(usize, usize)> = Vec::new();

    // Tiny runs: over a stretch of nodes the determinant cannot see, only
    // σ can find crossings, so every maximal run becomes one candidate
    // bracket.  Sub-noise stretches are routine near t = 0 for z close
    // to 1 — all eigenvalue gaps are still small there, and their product
    // drowns even though each crossing is perfectly regular.  Three or
    // more *hot* nodes in a row is different: the path lingers within
    // kernel reach of z, a non-isolated locus no refinement can count.
    let mut i = start;
    while i <= end {
        if class(i) == NodeClass::Clean {
            i += 1;
            continue;
        }
        let run_start = i;
        let mut hot_run = 0usize;
        let mut worst_hot = 0usize;
        while i <= end && class(i) != NodeClass::Clean {
            if class(i) == NodeClass::TinyHot {
                hot_run += 1;
                worst_hot = worst_hot.max(hot_run);
            } else {
                hot_run = 0;
            }
            i += 1;
        }
        if worst_hot >= 3 {
            return Bail {
                t: grid.times[run_start],
                reason: "crossing locus is not isolated".into(),
            };
        }
        brackets.push((run_start.saturating_sub(1).max(start), i.min(end)));
    }

    // Sign changes between consecutive trustworthy nodes.
    let mut prev_clean: Option<(usize, f64)> = None;
    for i in start..=end {
        if class(i) != NodeClass::Clean {
            continue;
        }
        if let Some((pi, ps)) = prev_clean {
            if ps * dhat[i] < 0.0 {
                brackets.push((pi, i));
            }
        }
        prev_clean = Some((i, dhat[i]));
    }

    // Dips: trustworthy local minima of |d̂| low enough to hide a
    // tangential crossing between nodes.  An exactly flat stretch is not
    // a dip: at least one neighbour must sit strictly higher.
    let dip_tol = DIP_FACTOR * (1.0 + grid.ascale).powi(2);
    for i in (start + 1)..end {
        if class(i) == NodeClass::Clean
            && class(i - 1) == NodeClass::Clean
            && class(i + 1) == NodeClass::Clean
            && dhat[i].abs() < dip_tol
            && dhat[i].abs() <= dhat[i - 1].abs()
            && dhat[i].abs() <= dhat[i + 1].abs()
            && (dhat[i].abs() < dhat[i - 1].abs() || dhat[i].abs() < dhat[i + 1].abs())
        {
            brackets.push((i - 1, i + 1));
        }
    }

    // Boundary cells: a tangential crossing in the first or last grid cell
    // leaves no interior local minimum — |d̂| just descends monotonically
    // into the boundary node.  A boundary node that undercuts its sole
    // neighbour therefore flags its cell.  The first cell of a z = 1 scan
    // is exempt: it belongs to the structural departure window, which has
    // already been σ-resolved in full.
    if end > start {
        if class(end) != NodeClass::TinyHot
            && class(end - 1) != NodeClass::TinyHot
            && dhat[end].abs() < dip_tol
            && dhat[end].abs() <= dhat[end - 1].abs()
        {
            brackets.push((end - 1, end));
        }
        if !at_one
            && class(start) != NodeClass::TinyHot
            && class(start + 1) != NodeClass::TinyHot
            && dhat[start].abs() < dip_tol
            && dhat[start].abs() <= dhat[start + 1].abs()
        {
            brackets.push((start, start + 1));
        }
    }

    if brackets.len() > MAX_CANDIDATES {
        return Bail {
            t: 0.0,
            reason: format!("{} candidate brackets exceed the scan budget", brackets.len()),
        };
    }
    brackets.sort_unstable();
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for (lo, hi) in brackets {
        match merged.last_mut() {
            Some((_, prev_hi)) if lo <= *prev_hi => *prev_hi = (*prev_hi).max(hi),
            _ => merged.push((lo, hi)),
        }
    }

    // ── resolve brackets and count their crossing forms ──
    let t_floor = grid.times[start];
    let t_ceil = grid.times[end];
    for (lo, hi) in merged {
        let t_lo = grid.times[lo];
        let t_hi = grid.times[hi];
        let crossings = match resolve_bracket(inp, z, t_lo, t_hi, grid.scale, width_tol) {
            Ok(ts) => ts,
            Err(reason) => {
                return Bail {
                    t: 0.5 * (t_lo + t_hi),
                    reason,
                };
            }
        };
        for &t_star in &crossings {
            if (at_one && t_star <= t_floor + dedup_tol) || t_star >= t_ceil - dedup_tol {
                // Refinement drifted into a structurally handled region.
                return Bail {
                    t: t_star,
                    reason: "crossing collides with a structural boundary".into(),
                };
            }
        }
        let (delta, odd_kernels) = match count_resolved_roots(inp, z, &crossings, form_tol) {
            Ok(c) => c,
            Err((t, reason)) => return Bail { t, reason },
        };
        total += delta;
        // Parity audit: d changes sign across a crossing exactly when the
        // kernel dimension is odd, so the bracket's own determinant signs
        // certify whether the resolved set is complete.  Judged only when
        // both signs stand above the noise floor.
        if dhat[lo].abs() > ZERO_D_TOL && dhat[hi].abs() > ZERO_D_TOL {
            let flips = dhat[lo] * dhat[hi] < 0.0;
            if flips != (odd_kernels % 2 == 1) {
                return Bail {
                    t: 0.5 * (t_lo + t_hi),
                    reason: format!(
                        "crossing parity disagrees with the determinant signs \
                         around the bracket ({} crossings with odd kernels, sign change: {flips})",
                        odd_kernels
                    ),
                };
            }
        }
    }

    Value(total)
}

/// Kernel, crossing-form, and seam checks for a batch of resolved crossing
/// times, shared by the interior brackets and the two structural windows.
/// Returns the summed form signature and how many crossings carry an
/// odd-dimensional kernel — each of those flips the determinant sign once,
/// which the callers' parity audits rely on.
fn count_resolved_roots(
    inp: &ScanInputs<'_>,
    z: C64,
    roots: &[f64],
    form_tol: f64,
) -> Result<(i64, usize), (f64, String)> {
    let mut delta = 0i64;
    let mut odd_kernels = 0usize;
    for &t_star in roots {
        let frame = (inp.eval)(t_star);
        let ker = crossing_kernel(&frame, z, inp.grid.scale);
        if ker.dim == 0 || !ker.sep_ok {
            return Err((t_star, "ambiguous kernel at a confirmed crossing".into()));
        }
        let (pos, neg, zero) = crossing_form_inertia(&(inp.gen)(t_star), &ker.basis, form_tol);
        if zero > 0 {
            return Err((t_star, "degenerate crossing form".into()));
        }
        // At a generator seam the two one-sided forms must agree.
        if let Some(&knot) = inp
            .knots
            .iter()
            .find(|&&k| (k - t_star).abs() < 1e-7 * (1.0 + inp.duration))
        {
            let side = if knot <= t_star {
                t_star + 1e-7
            } else {
                t_star - 1e-7
            };
            let other = crossing_form_inertia(
                &(inp.gen)(side.clamp(0.0, inp.duration)),
                &ker.basis,
                form_tol,
            );
            if other != (pos, neg, zero) {
                return Err((
                    t_star,
                    "one-sided crossing forms disagree at a generator seam".into(),
                ));
            }
        }
        delta += pos as i64 - neg as i64;
        if ker.dim % 2 == 1 {
            odd_kernels += 1;
        }
    }
    Ok((delta, odd_kernels))
}

/// Resolve one candidate bracket into zero or more crossing times by a
/// recursive descent on σ_min, then merge refinements of the same zero.
fn resolve_bracket(
    inp: &ScanInputs<'_>,
    z: C64,
    t_lo: f64,
    t_hi: f64,
    scale: f64,
    width_tol: f64,
) -> Result<Vec<f64>, String> {
    let mut crossings = Vec::new();
    sigma_roots(
        inp,
        z,
        t_lo,
        t_hi,
        scale,
        width_tol,
        RESOLVE_DEPTH,
        &mut crossings,
    )?;
    crossings.sort_by(|a, b| a.partial_cmp(b).expect("crossing times are finite"));
    let dedup_tol = DEDUP_FACTOR * (1.0 + inp.duration);
    crossings.dedup_by(|a, b| (*a - *b).abs() <= dedup_tol);
    Ok(crossings)
}

/// Locate every zero of σ_min(Γ(t) − z·Id) inside [lo, hi]: sample σ on a
/// uniform grid, seed a window around each sampled local minimum that is
/// low enough to hide a zero between neighbours (boundary minima
/// included), and refine each window — recursively above the bottom
/// level, by golden-section at the bottom.  Three levels take the
/// resolution five orders of magnitude below the bracket width, which
/// splits the near-coincident crossing pairs that one blind minimization
/// conflates — an elliptic path grazing z opens a hyperbolic micro-window
/// bounded by two separate crossings whose determinant dip is far below
/// the noise floor, visible only to σ.
#[allow(clippy::too_many_arguments)]
fn sigma_roots(
    inp: &ScanInputs<'_>,
    z: C64,
    lo: f64,
    hi: f64,
    scale: f64,
    width_tol: f64,
    depth: usize,
    out: &mut Vec<f64>,
) -> Result<(), String> {
    let ker_tol = KERNEL_FACTOR * scale;
    let clear_tol = CLEAR_FACTOR * scale;
    if hi - lo <= 4.0 * width_tol {
        // Degenerate window: classify its midpoint directly.
        let (t_star, sigma_star) = golden_min_sigma(inp.eval, z, lo, hi, width_tol);
        classify_minimum(inp, z, t_star, sigma_star, ker_tol, clear_tol, out)?;
        return Ok(());
    }

    let points = if depth == RESOLVE_DEPTH {
        SUBDIVISIONS
    } else {
        FINE_POINTS
    };
    let h = (hi - lo) / points as f64;
    let sigmas: Vec<f64> = (0..=points)
        .map(|i| sigma_min(&(inp.eval)(lo + h * i as f64), z))
        .collect();
    let promote = (4.0 * h * inp.grid.ascale * scale).max(10.0 * KERNEL_FACTOR * scale);

    let mut seeds: Vec<usize> = Vec::new();
    for i in 0..=points {
        if sigmas[i] > promote {
            continue;
        }
        let left_ok = i == 0 || sigmas[i] <= sigmas[i - 1];
        let right_ok = i == points || sigmas[i] <= sigmas[i + 1];
        if left_ok && right_ok {
            // A run of equal values seeds only once, at its left edge.
            if i > 0 && sigmas[i - 1] == sigmas[i] {
                continue;
            }
            seeds.push(i);
        }
    }
    if seeds.len() > MAX_SEEDS {
        return Err(format!(
            "{} σ-minima in one bracket: crossing structure too dense to resolve",
            seeds.len()
        ));
    }

    for seed in seeds {
        let t_seed = lo + h * seed as f64;
        let w_lo = (t_seed - 2.0 * h).max(lo);
        let w_hi = (t_seed + 2.0 * h).min(hi);
        if depth == 0 {
            let (t_star, sigma_star) = golden_min_sigma(inp.eval, z, w_lo, w_hi, width_tol);
            classify_minimum(inp, z, t_star, sigma_star, ker_tol, clear_tol, out)?;
        } else {
            sigma_roots(inp, z, w_lo, w_hi, scale, width_tol, depth - 1, out)?;
        }
    }
    Ok(())
}

/// Classify one refined σ-minimum against the kernel/clear bands.
fn classify_minimum(
    inp: &ScanInputs<'_>,
    z: C64,
    t_star: f64,
    sigma_star: f64,
    ker_tol: f64,
    clear_tol: f64,
    out: &mut Vec<f64>,
) -> Result<(), String> {
    if sigma_star <= ker_tol {
        out.push(t_star);
    } else if sigma_star < clear_tol && eigen_distance(&(inp.eval)(t_star), z) < EIG_CLEAR_TOL {
        // σ_min in the band with z a whole spectral gap away is mere
        // defective proximity, not a crossing; only genuine spectral
        // closeness makes the minimum ambiguous.
        return Err(format!(
            "near-crossing with σ_min = {sigma_star:.3e} in the ambiguity band"
        ));
    }
    Ok(())
}

/// Golden-section minimization of σ_min(Γ(t) − z·Id) over [lo, hi].
fn golden_min_sigma(
    eval: &dyn Fn(f64) -> DMatrix<f64>,
    z: C64,
    mut lo: f64,
    mut hi: f64,
    width_tol: f64,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut a = hi - INV_PHI * (hi - lo);
    let mut b = lo + INV_PHI * (hi - lo);
    let mut fa = sigma_min(&eval(a), z);
    let mut fb = sigma_min(&eval(b), z);
    while hi - lo > width_tol {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - INV_PHI * (hi - lo);
            fa = sigma_min(&eval(a), z);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + INV_PHI * (hi - lo);
            fb = sigma_min(&eval(b), z);
        }
    }
    let t = 0.5 * (lo + hi);
    (t, sigma_min(&eval(t), z))
}

// ─── tests ───────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::TAU;

    fn rotation_frame(w: f64, t: f64) -> DMatrix<f64> {
        let phi = TAU * w * t;
        DMatrix::from_row_slice(2, 2, &[phi.cos(), phi.sin(), -phi.sin(), phi.cos()])
    }

    /// d is real and vanishes exactly on the spectrum of a rotation.
    #[test]
    fn d_value_tracks_rotation_spectrum() {
        let frame = rotation_frame(1.0, 0.25); // spectrum {±i}
        let hit = C64::new(0.0, 1.0);
        let miss = C64::new(1.0, 0.0);
        assert_abs_diff_eq!(d_value(&frame, hit), 0.0, epsilon = 1e-12);
        assert!(d_value(&frame, miss).abs() > 0.5);
        // Proxy matches |det| in magnitude on the circle.
        let det = complex_shift(&frame, miss).lu().determinant();
        assert_abs_diff_eq!(d_value(&frame, miss).abs(), det.norm(), epsilon = 1e-12);
    }

    /// Kernel extraction finds the two-dimensional kernel of Γ − Id at a
    /// full turn and reports clean separation.
    #[test]
    fn kernel_of_full_turn_is_planar() {
        let frame = rotation_frame(1.0, 1.0);
        let ker = crossing_kernel(&frame, C64::new(1.0, 0.0), 2.0);
        assert_eq!(ker.dim, 2);
        assert!(ker.sep_ok);
        // Basis columns are orthonormal.
        let gram = ker.basis.adjoint() * &ker.basis;
        assert_abs_diff_eq!(
            (gram - DMatrix::identity(2, 2)).map(|c: C64| c.norm()).amax(),
            0.0,
            epsilon = 1e-10
        );
    }

    /// The crossing form of a positive rotation on its full-turn kernel
    /// is positive definite: inertia (2, 0, 0).
    #[test]
    fn rotation_crossing_form_inertia() {
        let frame = rotation_frame(1.0, 1.0);
        let ker = crossing_kernel(&frame, C64::new(1.0, 0.0), 2.0);
        let a = DMatrix::from_diagonal_element(2, 2, TAU);
        assert_eq!(crossing_form_inertia(&a, &ker.basis, 1e-7), (2, 0, 0));
        assert_eq!(crossing_form_inertia(&(-a), &ker.basis, 1e-7), (0, 2, 0));
    }

    /// Golden-section refinement pins an interior crossing of a rotation
    /// to the analytic time.
    #[test]
    fn golden_section_locates_crossing() {
        let eval = |t: f64| rotation_frame(-1.0, t);
        // spec Γ(t) = {e^{∓2πit}} hits i at t = 1/4 via the conjugate leg.
        let z = C64::new(0.0, 1.0);
        let (t, s) = golden_min_sigma(&eval, z, 0.1, 0.4, 1e-12);
        assert_abs_diff_eq!(t, 0.25, epsilon = 1e-9);
        assert!(s < 1e-9);
    }
}

//! Evaluation engine: classification of circle points, invariant-block
//! splitting, the two-tier scan cascade, and per-angle caching.
//!
//! A query 𝓑(e^{iθ}) is answered in three moves:
//!
//! 1. **Classify** θ against the endpoint spectrum.  Angles within the
//!    snap width of an eigenvalue angle are identified with it (the
//!    crossing machinery then proves the identification by checking the
//!    kernel dimension); angles inside the wider proximity band are
//!    refused for external queries — the value there depends on which
//!    side of the eigenvalue the query falls, so answering would be a
//!    guess.  Internal consumers that construct their own offsets (arc
//!    midpoints, splitting-number side queries) bypass the proximity
//!    refusal.
//!
//! 2. **Split into invariant blocks.**  Paths assembled as direct sums
//!    keep exact zero off-diagonal pairs; the z-index is additive over
//!    such a splitting, and scanning blocks separately keeps one block's
//!    permanent degeneracy (a shear direction pinned at eigenvalue 1)
//!    from drowning out another block's honest crossings in the shared
//!    determinant.
//!
//! 3. **Scan** each block: the direct tier evaluates the path exactly;
//!    if any crossing is degenerate or ambiguous the shifted tier
//!    reruns the scan on the flow of A(t) − s·Id for three shifts and
//!    accepts only a unanimous verdict.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex;
use sympl_core::{circle_spectrum, circular_distance, CircleSpectrum, SPECTRUM_TOL};
use sympl_path::{integrate_flow, DenseFlow, SymplecticPath};

use crate::crossings::{
    z_index_scan, DetectionGrid, EndpointRule, ScanInputs, ScanOutcome, DETECT_PER_UNIT, S_SHIFTS,
};
use crate::error::IndexError;

type C64 = Complex<f64>;

// ─── angle handling ──────────────────────────────────────────────────────

/// Queries within this of an endpoint eigenvalue angle are identified
/// with it.
pub(crate) const THETA_SNAP: f64 = 1e-9;

/// External queries within this of an endpoint eigenvalue (beyond the
/// snap) are refused as ambiguous.
pub(crate) const THETA_PROX: f64 = 1e-7;

/// Canonical representative of an angle in [0, 2π), with exact snapping
/// of the two real circle points.
pub(crate) fn canon_theta(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(TAU);
    if t.abs() <= 1e-12 || (t - TAU).abs() <= 1e-12 {
        t = 0.0;
    } else if (t - PI).abs() <= 1e-12 {
        t = PI;
    }
    t
}

/// e^{iθ}, exact at the two real circle points.
pub(crate) fn angle_to_z(theta: f64) -> C64 {
    if theta == 0.0 {
        C64::new(1.0, 0.0)
    } else if theta == PI {
        C64::new(-1.0, 0.0)
    } else {
        C64::from_polar(1.0, theta)
    }
}

// ─── invariant blocks ────────────────────────────────────────────────────

/// One invariant coordinate block of the path: a set of conjugate
/// coordinate pairs that never couples to the rest in any sampled frame
/// or generator.
struct BlockData {
    /// Full-matrix row/column indices of the block, ascending.
    cols: Vec<usize>,
    /// Endpoint spectrum of the block.
    spectrum: CircleSpectrum,
    /// Direct-tier detection grid (exact subsampled frames).
    grid: DetectionGrid,
    /// Shifted-tier flows, built on first use.
    shifts: Option<Vec<ShiftTrace>>,
}

/// One regularized flow of the shifted tier.
struct ShiftTrace {
    s: f64,
    flow: DenseFlow,
    grid: DetectionGrid,
}

/// Extract the square submatrix on `cols`.
fn extract(m: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(cols.len(), cols.len(), |i, j| m[(cols[i], cols[j])])
}

/// Partition the coordinate pairs into connected components under the
/// relation "some sampled frame or generator couples them".  Exact zeros
/// are required: direct-sum constructions preserve them bit-for-bit.
fn detect_blocks(dim_half: usize, samples: &[&DMatrix<f64>]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..dim_half).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for m in samples {
        for pi in 0..dim_half {
            for pj in (pi + 1)..dim_half {
                let coupled = (0..2).any(|a| {
                    (0..2).any(|b| {
                        m[(2 * pi + a, 2 * pj + b)] != 0.0 || m[(2 * pj + b, 2 * pi + a)] != 0.0
                    })
                });
                if coupled {
                    let (ri, rj) = (find(&mut parent, pi), find(&mut parent, pj));
                    if ri != rj {
                        parent[ri] = rj;
                    }
                }
            }
        }
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for pair in 0..dim_half {
        let root = find(&mut parent, pair);
        groups.entry(root).or_default().push(pair);
    }
    let mut blocks: Vec<Vec<usize>> = groups
        .into_values()
        .map(|pairs| {
            let mut cols: Vec<usize> = pairs.iter().flat_map(|&p| [2 * p, 2 * p + 1]).collect();
            cols.sort_unstable();
            cols
        })
        .collect();
    blocks.sort();
    blocks
}

// ─── the engine ──────────────────────────────────────────────────────────

pub(crate) struct Engine<'p> {
    path: &'p SymplecticPath,
    duration: f64,
    /// Endpoint spectrum of the full path, used for classification and
    /// the ν/η maps.
    pub(crate) spectrum: CircleSpectrum,
    blocks: Vec<BlockData>,
    knots: Vec<f64>,
    cache: HashMap<u64, i64>,
    /// Test hook: skip the direct tier and force every query through the
    /// shifted ladder.
    pub(crate) force_shifted: bool,
}

impl<'p> Engine<'p> {
    pub(crate) fn new(path: &'p SymplecticPath) -> Result<Self, IndexError> {
        let spectrum = circle_spectrum(path.endpoint(), SPECTRUM_TOL)?;
        let duration = path.duration();
        let knots = path.generator_knots();

        // Subsample the realized frames down to the detection density.
        let stride = ((path.resolution() / DETECT_PER_UNIT).round() as usize).max(1);
        let samples = path.samples();
        let gens = path.generator_samples();
        let mut times: Vec<f64> = Vec::new();
        let mut frames: Vec<DMatrix<f64>> = Vec::new();
        let mut gen_nodes: Vec<&DMatrix<f64>> = Vec::new();
        for (i, (t, m)) in samples.iter().enumerate() {
            if i % stride == 0 || i == samples.len() - 1 {
                times.push(*t);
                frames.push(m.entries().clone());
                gen_nodes.push(&gens[i].1);
            }
        }

        let mut pattern_samples: Vec<&DMatrix<f64>> = frames.iter().collect();
        pattern_samples.extend(gen_nodes.iter().copied());
        pattern_samples.push(path.endpoint().entries());
        let partition = detect_blocks(path.dim_half(), &pattern_samples);

        let blocks = partition
            .into_iter()
            .map(|cols| {
                let sub_frames: Vec<DMatrix<f64>> =
                    frames.iter().map(|f| extract(f, &cols)).collect();
                let ascale = 1.0
                    + gen_nodes
                        .iter()
                        .map(|g| extract(g, &cols).amax())
                        .fold(0.0, f64::max);
                let grid = DetectionGrid::new(times.clone(), sub_frames, ascale);
                let endpoint = sympl_core::SymplecticMatrix::new_unchecked(extract(
                    path.endpoint().entries(),
                    &cols,
                ));
                let spectrum = circle_spectrum(&endpoint, SPECTRUM_TOL)?;
                Ok(BlockData {
                    cols,
                    spectrum,
                    grid,
                    shifts: None,
                })
            })
            .collect::<Result<Vec<_>, IndexError>>()?;

        Ok(Self {
            path,
            duration,
            spectrum,
            blocks,
            knots,
            cache: HashMap::new(),
            force_shifted: false,
        })
    }

    pub(crate) fn dim_half(&self) -> usize {
        self.path.dim_half()
    }

    pub(crate) fn duration(&self) -> f64 {
        self.duration
    }

    /// Classify an angle against the endpoint spectrum: snap to a
    /// spectral angle, refuse the proximity band (unless bypassed), or
    /// pass the angle through.
    pub(crate) fn classify(&self, theta: f64, bypass_prox: bool) -> Result<f64, IndexError> {
        let t = canon_theta(theta);
        let nearest = self
            .spectrum
            .points
            .iter()
            .map(|p| (circular_distance(p.theta, t), p.theta))
            .min_by(|a, b| a.partial_cmp(b).expect("distances are finite"));
        if let Some((dist, point_theta)) = nearest {
            if dist <= THETA_SNAP {
                return Ok(point_theta);
            }
            if dist <= THETA_PROX && !bypass_prox {
                return Err(IndexError::SpectralProximity {
                    theta: t,
                    distance: dist,
                });
            }
        }
        Ok(t)
    }

    /// The z-index 𝓑(e^{iθ}), summed over invariant blocks.
    pub(crate) fn bott_at(&mut self, theta: f64, bypass_prox: bool) -> Result<i64, IndexError> {
        let theta_star = self.classify(theta, bypass_prox)?;
        if let Some(&v) = self.cache.get(&theta_star.to_bits()) {
            return Ok(v);
        }
        let path = self.path;
        let duration = self.duration;
        let knots = &self.knots;
        let force = self.force_shifted;
        let mut total = 0;
        for block in &mut self.blocks {
            total += block_bott(path, duration, knots, block, theta_star, force)?;
        }
        self.cache.insert(theta_star.to_bits(), total);
        Ok(total)
    }

    /// Endpoint ν at an angle (0 when not spectral).
    pub(crate) fn nu_at(&self, theta: f64) -> usize {
        self.spectrum.nu_near(canon_theta(theta), THETA_SNAP)
    }

    /// Endpoint η (algebraic multiplicity) at an angle.
    pub(crate) fn eta_at(&self, theta: f64) -> usize {
        self.spectrum
            .point_near(canon_theta(theta), THETA_SNAP)
            .map_or(0, |p| p.eta)
    }

    /// Splitting numbers (S⁺, S⁻) at an angle: one-sided jumps of 𝓑
    /// across the eigenvalue.  Non-eigenvalue angles split trivially.
    pub(crate) fn splitting_at(&mut self, theta: f64) -> Result<(i64, i64), IndexError> {
        let t = canon_theta(theta);
        let Some(point_theta) = self
            .spectrum
            .point_near(t, THETA_SNAP)
            .map(|p| p.theta)
        else {
            return Ok((0, 0));
        };
        // Side queries must stay inside the arcs adjacent to this
        // eigenvalue: step off by half the smallest gap between distinct
        // spectral angles, capped at 1e-3.
        let mut min_gap = TAU;
        let pts = &self.spectrum.points;
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                min_gap = min_gap.min(circular_distance(pts[i].theta, pts[j].theta));
            }
        }
        if min_gap < 10.0 * SPECTRUM_TOL {
            return Err(IndexError::SpectralProximity {
                theta: point_theta,
                distance: min_gap,
            });
        }
        let eps = (0.5 * min_gap).min(1e-3);
        let at = self.bott_at(point_theta, true)?;
        let above = self.bott_at(point_theta + eps, true)?;
        let below = self.bott_at(point_theta - eps, true)?;
        Ok((above - at, below - at))
    }
}

/// 𝓑 contribution of one invariant block, trying the direct tier first
/// and falling back to the shifted ladder, which must produce at least
/// two agreeing verdicts.
fn block_bott(
    path: &SymplecticPath,
    duration: f64,
    knots: &[f64],
    block: &mut BlockData,
    theta_star: f64,
    force_shifted: bool,
) -> Result<i64, IndexError> {
    // Re-snap to the block's own spectral angle: the full spectrum's
    // cluster centre can sit a hair off the block's, and the kernel test
    // needs the block-exact z.
    let (theta_b, nu_block) = match block.spectrum.point_near(theta_star, 2.0 * SPECTRUM_TOL) {
        Some(p) => (p.theta, Some(p.nu)),
        None => (theta_star, None),
    };
    let z = angle_to_z(theta_b);
    let at_one = theta_b == 0.0;
    let cols = block.cols.clone();

    if !force_shifted {
        // A `None` from the re-snap certifies that z keeps at least twice
        // the spectral tolerance away from every endpoint eigenvalue
        // cluster of this block, so the endpoint truly is clear of z.
        let rule = match nu_block {
            Some(nu_end) => EndpointRule::HalfCount { nu_end },
            None => EndpointRule::MustClear { certified: true },
        };
        let eval = |t: f64| extract(&path.frame(t), &cols);
        let gen = |t: f64| extract(&path.generator(t), &cols);
        let inputs = ScanInputs {
            grid: &block.grid,
            eval: &eval,
            gen: &gen,
            duration,
            knots,
        };
        if let ScanOutcome::Value(v) = z_index_scan(&inputs, z, at_one, &rule) {
            return Ok(v);
        }
    }

    // ── shifted tier ──
    if block.shifts.is_none() {
        block.shifts = Some(build_shifts(path, duration, knots, &cols, block.grid.ascale)?);
    }
    let shifts = block.shifts.as_ref().expect("just built");

    // A single shift may abstain — its displaced endpoint spectrum can
    // land on z (e.g. a shift of size s splays a unipotent pair to angle
    // ~√s, which can collide with a side query) — but two independent
    // displacement scales agreeing is already a certificate, and any
    // disagreement among successes stays fatal.
    let mut verdicts: Vec<i64> = Vec::new();
    let mut abstentions: Vec<String> = Vec::new();
    for trace in shifts {
        let s = trace.s;
        let cols_s = &cols;
        let gen_s = move |t: f64| {
            let mut g = extract(&path.generator(t), cols_s);
            for d in 0..g.nrows() {
                g[(d, d)] -= s;
            }
            g
        };
        let eval = |t: f64| trace.flow.eval_with(&gen_s, t);
        let inputs = ScanInputs {
            grid: &trace.grid,
            eval: &eval,
            gen: &gen_s,
            duration,
            knots,
        };
        let rule = EndpointRule::MustClear { certified: false };
        match z_index_scan(&inputs, z, at_one, &rule) {
            ScanOutcome::Value(v) => verdicts.push(v),
            ScanOutcome::Bail { t, reason } => {
                abstentions.push(format!("shift {s:.0e} at t = {t:.6}: {reason}"));
            }
        }
    }
    if verdicts.len() < 2 {
        return Err(IndexError::UnresolvedCrossing {
            t: duration,
            detail: format!("shift ladder cannot certify ({})", abstentions.join("; ")),
        });
    }
    if verdicts.windows(2).any(|w| w[0] != w[1]) {
        return Err(IndexError::UnresolvedCrossing {
            t: duration,
            detail: format!("shift ladder disagrees: {verdicts:?}"),
        });
    }
    Ok(verdicts[0])
}

/// Integrate the three regularized flows of one block and sample their
/// detection grids (nodes plus midpoints, evaluated exactly).
fn build_shifts(
    path: &SymplecticPath,
    duration: f64,
    knots: &[f64],
    cols: &[usize],
    base_ascale: f64,
) -> Result<Vec<ShiftTrace>, IndexError> {
    let dim_half = cols.len() / 2;
    S_SHIFTS
        .iter()
        .map(|&s| {
            let gen_s = |t: f64| {
                let mut g = extract(&path.generator(t), cols);
                for d in 0..g.nrows() {
                    g[(d, d)] -= s;
                }
                g
            };
            let flow = integrate_flow(&gen_s, dim_half, duration, knots)?;
            let nodes = flow.nodes();
            let mut times = Vec::with_capacity(2 * nodes.len());
            let mut frames = Vec::with_capacity(2 * nodes.len());
            for (i, (t, m)) in nodes.iter().enumerate() {
                times.push(*t);
                frames.push(m.clone());
                if i + 1 < nodes.len() {
                    let tm = 0.5 * (*t + nodes[i + 1].0);
                    times.push(tm);
                    frames.push(flow.eval_with(&gen_s, tm));
                }
            }
            let grid = DetectionGrid::new(times, frames, base_ascale + s);
            Ok(ShiftTrace { s, flow, grid })
        })
        .collect()
}

// ─── tests ───────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canon_theta_wraps_and_snaps() {
        assert_eq!(canon_theta(TAU), 0.0);
        assert_eq!(canon_theta(-TAU), 0.0);
        assert_eq!(canon_theta(PI + 1e-13), PI);
        assert_eq!(canon_theta(3.0 * PI), PI);
        let t = canon_theta(-0.5);
        assert!((t - (TAU - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn angle_to_z_is_exact_on_real_axis() {
        assert_eq!(angle_to_z(0.0), C64::new(1.0, 0.0));
        assert_eq!(angle_to_z(PI), C64::new(-1.0, 0.0));
        let z = angle_to_z(PI / 3.0);
        assert!((z.norm() - 1.0).abs() < 1e-15);
    }

    /// A direct sum of a rotation and a shear splits into two invariant
    /// blocks; a plain rotation stays whole.
    #[test]
    fn block_detection_splits_direct_sums() {
        let rot = SymplecticPath::rotation(1.0, 1.0, 512.0).unwrap();
        let shear = SymplecticPath::shear(0.7, 1.0, 512.0).unwrap();
        let sum = SymplecticPath::direct_sum(&[&rot, &shear]).unwrap();
        let engine = Engine::new(&sum).unwrap();
        assert_eq!(engine.blocks.len(), 2);
        assert_eq!(engine.blocks[0].cols, vec![0, 1]);
        assert_eq!(engine.blocks[1].cols, vec![2, 3]);

        let engine = Engine::new(&rot).unwrap();
        assert_eq!(engine.blocks.len(), 1);
    }
}


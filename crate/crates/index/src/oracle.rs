//! Independent slow estimator of the index for cross-validation.
//!
//! The index convention realized by this crate is the minimum of the
//! index over nearby endpoint-nondegenerate paths.  This module computes
//! that minimum directly, without sharing any machinery policy with the
//! production engine: it perturbs the path multiplicatively,
//!
//! > Γ̃(t) = Γ(t)·exp((t/T)·J·S),
//!
//! for many random small symmetric S, counts each perturbed path's
//! crossings at z = 1 with a plain one-pass scan, and takes the minimum
//! over the draws whose endpoint became nondegenerate.  The linear ramp
//! keeps Γ̃(0) = Id, moves the endpoint to exactly Γ(T)·exp(J·S), and
//! adds Γ⁻ᵀ·(S/T)·Γ⁻¹ to the generator, so at t = 0 the perturbed
//! generator is A(0) + S/T.
//!
//! S is drawn as Q·D·Qᵀ with a Haar-ish orthogonal Q and a diagonal D
//! whose entry signs are independent fair coins: every inertia pattern
//! of the perturbation appears with probability ≥ 2^{−2n}, so the draws
//! reliably include the patterns that realize the minimum (a fully
//! negative pattern for a constant path, for example), which a plain
//! Gaussian symmetric draw almost never produces beyond dimension four.

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sympl_core::{matrix_exp, standard_j};
use sympl_path::SymplecticPath;

use crate::crossings::{
    z_index_scan, DetectionGrid, EndpointRule, ScanInputs, ScanOutcome, DETECT_PER_UNIT,
};
use crate::error::IndexError;
use crate::report::cz_index;

/// Magnitude scale of the endpoint perturbation exp(J·S): ‖D‖ ∈
/// [MAG/2, MAG].  Large enough to clear the kernel tolerance bands by
/// orders of magnitude, small enough not to reach the next eigenvalue
/// cluster of any reasonably separated endpoint.
const MAG: f64 = 1e-4;

/// Distinct-stream increment for per-draw RNGs (the 64-bit golden ratio).
const STREAM: u64 = 0x9E37_79B9_7F4A_7C15;

/// Estimate the index as the minimum over `draws` random perturbations.
/// Draws whose crossing pattern cannot be counted are skipped; fewer
/// than half the draws surviving is an error, not an answer.
pub fn liminf_cz_estimate(
    path: &SymplecticPath,
    draws: usize,
    seed: u64,
) -> Result<i64, IndexError> {
    assert!(draws > 0, "the estimate needs at least one draw");
    let dim_half = path.dim_half();
    let dim = 2 * dim_half;
    let duration = path.duration();
    let j = standard_j(dim_half);

    // Cache the base trace once at detection density.
    let stride = ((path.resolution() / DETECT_PER_UNIT).round() as usize).max(1);
    let samples = path.samples();
    let gens = path.generator_samples();
    let mut times: Vec<f64> = Vec::new();
    let mut base_frames: Vec<DMatrix<f64>> = Vec::new();
    let mut base_ascale: f64 = 0.0;
    for (i, (t, m)) in samples.iter().enumerate() {
        if i % stride == 0 || i == samples.len() - 1 {
            times.push(*t);
            base_frames.push(m.entries().clone());
            base_ascale = base_ascale.max(gens[i].1.amax());
        }
    }
    let base_scale = 1.0 + base_frames.iter().map(DMatrix::amax).fold(0.0, f64::max);
    let knots = path.generator_knots();

    let results: Vec<Option<i64>> = (0..draws)
        .into_par_iter()
        .map(|i| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(seed.wrapping_add((i as u64).wrapping_mul(STREAM)));
            let s = signed_spectrum_draw(&mut rng, dim);
            count_perturbed(
                path,
                &j,
                &s,
                &times,
                &base_frames,
                base_ascale,
                base_scale,
                duration,
                &knots,
            )
        })
        .collect();

    let successes: Vec<i64> = results.into_iter().flatten().collect();
    if 2 * successes.len() < draws {
        return Err(IndexError::UnresolvedCrossing {
            t: 0.0,
            detail: format!(
                "perturbation estimate: only {}/{draws} draws countable",
                successes.len()
            ),
        });
    }
    Ok(successes.into_iter().min().expect("at least one success"))
}

/// S = Q·D·Qᵀ with Q orthogonal from a QR factorization of a Gaussian
/// matrix and D diagonal with independently signed magnitudes in
/// [MAG/2, MAG].
fn signed_spectrum_draw<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DMatrix<f64> {
    let raw = DMatrix::from_fn(dim, dim, |_, _| gaussian(rng));
    let q = raw.qr().q();
    let d = DMatrix::from_fn(dim, dim, |r, c| {
        if r == c {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            sign * MAG * (0.5 + 0.5 * rng.random::<f64>())
        } else {
            0.0
        }
    });
    let s = &q * d * q.transpose();
    (&s + s.transpose()) * 0.5
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Box–Muller from two uniforms; the first is kept away from zero.
    let u1: f64 = rng.random::<f64>().max(1e-12);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Count μ of one perturbed path: a direct one-pass scan first, and a
/// fully realized product path through the production engine when the
/// direct pass cannot decide.  `None` marks an uncountable draw.
#[allow(clippy::too_many_arguments)]
fn count_perturbed(
    path: &SymplecticPath,
    j: &DMatrix<f64>,
    s: &DMatrix<f64>,
    times: &[f64],
    base_frames: &[DMatrix<f64>],
    base_ascale: f64,
    base_scale: f64,
    duration: f64,
    knots: &[f64],
) -> Option<i64> {
    let js = j * s;
    let s_over_t = s / duration;

    let frames: Vec<DMatrix<f64>> = times
        .iter()
        .zip(base_frames)
        .map(|(&t, f)| f * matrix_exp(&(&js * (t / duration))))
        .collect();
    // ‖Γ⁻ᵀ·(S/T)·Γ⁻¹‖ ≤ ‖S/T‖·‖Γ‖² up to constants; an overestimate of
    // the generator scale only loosens detection thresholds slightly.
    let ascale = 1.0 + base_ascale + s_over_t.amax() * base_scale * base_scale * 4.0;
    let grid = DetectionGrid::new(times.to_vec(), frames, ascale);

    let eval = |t: f64| path.frame(t) * matrix_exp(&(&js * (t / duration)));
    let gen = |t: f64| {
        let frame = path.frame(t);
        let m = -(j * frame * j); // Γ⁻ᵀ for symplectic Γ
        path.generator(t) + &m * &s_over_t * m.transpose()
    };
    let inputs = ScanInputs {
        grid: &grid,
        eval: &eval,
        gen: &gen,
        duration,
        knots,
    };
    let rule = EndpointRule::MustClear { certified: false };
    match z_index_scan(&inputs, Complex::new(1.0, 0.0), true, &rule) {
        ScanOutcome::Value(v) => Some(v),
        ScanOutcome::Bail { .. } => {
            // Realize Γ̃ as an honest path and let the production engine
            // (blocks, shifted ladder and all) try; an error skips the
            // draw.
            let js_frame = js.clone();
            let gen_const = s_over_t.clone();
            let factor = SymplecticPath::from_exact_parts(
                move |t| matrix_exp(&(&js_frame * (t / duration))),
                move |_| gen_const.clone(),
                path.dim_half(),
                duration,
                path.resolution(),
            )
            .ok()?;
            let perturbed = path.pointwise_product(&factor).ok()?;
            cz_index(&perturbed).ok()
        }
    }
}

// ─── tests ───────────────────────────────────────────────────────────────

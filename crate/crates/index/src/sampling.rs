//! Random path generators for the validation suites.
//!
//! Three families with complementary structure:
//!
//! * [`random_block_path`] — direct sums of planar rotation and shear
//!   blocks (mixing exact half-integer rotation weights with continuous
//!   ones), optionally multiplied by a small smooth path or a closed
//!   loop.  These carry rich endpoint spectra — repeated eigenvalues,
//!   shear degeneracies, real-point clusters — while every true value
//!   remains derivable from closed forms.
//! * [`random_smooth_path`] — flows of dense trigonometric generator
//!   polynomials, exercising the integrator-backed evaluation and
//!   generic (simple-spectrum) endpoints.
//! * [`random_path`] — a mix of the two plus dense block/smooth
//!   products.
//!
//! All draws are deterministic functions of the caller's RNG state, so
//! suites seed a [`rand_chacha::ChaCha8Rng`] and replay exactly.

use nalgebra::DMatrix;
use rand::Rng;
use sympl_path::SymplecticPath;
use std::f64::consts::TAU;

/// Sampling density used by the validation zoo; coarser than the
/// production default because suites realize hundreds of paths.
pub const SUITE_RESOLUTION: f64 = 512.0;

/// A direct sum of `dim_half` planar blocks, optionally decorated.
///
/// Each block is a rotation (60%: exact weight from {±0.5, ±1, ±1.5}
/// half the time, else continuous in ±[0.25, 1.8]) or a shear with
/// slope in ±[0.3, 1.2].  With probability 0.3 the sum is multiplied
/// pointwise by a small dense smooth path (coupling the blocks), and
/// with probability 0.2 by a closed loop of winding ±1.
pub fn random_block_path<R: Rng + ?Sized>(rng: &mut R, dim_half: usize) -> SymplecticPath {
    let duration = rng.random_range(0.5..1.5);
    let mut blocks = Vec::with_capacity(dim_half);
    for _ in 0..dim_half {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        if rng.random_bool(0.6) {
            let magnitude = if rng.random_bool(0.5) {
                [0.5, 1.0, 1.5][rng.random_range(0..3)]
            } else {
                rng.random_range(0.25..1.8)
            };
            blocks.push(
                SymplecticPath::rotation(sign * magnitude, duration, SUITE_RESOLUTION)
                    .expect("rotation block realizes"),
            );
        } else {
            let slope = sign * rng.random_range(0.3..1.2);
            blocks.push(
                SymplecticPath::shear(slope, duration, SUITE_RESOLUTION)
                    .expect("shear block realizes"),
            );
        }
    }
    let refs: Vec<&SymplecticPath> = blocks.iter().collect();
    let mut path = SymplecticPath::direct_sum(&refs).expect("direct sum realizes");

    if rng.random_bool(0.3) {
        let ripple = smooth_path(rng, dim_half, duration, 0.15);
        path = path
            .pointwise_product(&ripple)
            .expect("product with a smooth ripple realizes");
    }
    if rng.random_bool(0.2) {
        let maslov = if rng.random_bool(0.5) { 1 } else { -1 };
        path = path.loop_multiply(maslov).expect("loop decoration realizes");
    }
    path
}

/// The flow of a dense trigonometric generator
/// A(t) = C₀ + C₁·sin(2π·m₁·t/T + φ₁) + C₂·cos(2π·m₂·t/T)
/// with independent symmetric coefficient matrices.
pub fn random_smooth_path<R: Rng + ?Sized>(rng: &mut R, dim_half: usize) -> SymplecticPath {
    let duration = rng.random_range(0.5..1.5);
    smooth_path(rng, dim_half, duration, 0.8)
}

/// Mixed draw: 50% block sums, 30% smooth flows, 20% dense products of
/// the two.
pub fn random_path<R: Rng + ?Sized>(rng: &mut R, dim_half: usize) -> SymplecticPath {
    let r = rng.random::<f64>();
    if r < 0.5 {
        random_block_path(rng, dim_half)
    } else if r < 0.8 {
        random_smooth_path(rng, dim_half)
    } else {
        let block = random_block_path(rng, dim_half);
        let ripple = smooth_path(rng, dim_half, block.duration(), 0.3);
        block
            .pointwise_product(&ripple)
            .expect("block–smooth product realizes")
    }
}

fn smooth_path<R: Rng + ?Sized>(
    rng: &mut R,
    dim_half: usize,
    duration: f64,
    amplitude: f64,
) -> SymplecticPath {
    let c0 = random_symmetric(rng, 2 * dim_half, amplitude);
    let c1 = random_symmetric(rng, 2 * dim_half, amplitude);
    let c2 = random_symmetric(rng, 2 * dim_half, 0.5 * amplitude);
    let m1 = rng.random_range(1..=3) as f64;
    let m2 = rng.random_range(1..=2) as f64;
    let phi = rng.random_range(0.0..TAU);
    let omega = TAU / duration;
    SymplecticPath::from_generator_fn(
        move |t| &c0 + &c1 * (omega * m1 * t + phi).sin() + &c2 * (omega * m2 * t).cos(),
        dim_half,
        duration,
        SUITE_RESOLUTION,
    )
    .expect("smooth generator flow realizes")
}

fn random_symmetric<R: Rng + ?Sized>(rng: &mut R, dim: usize, amplitude: f64) -> DMatrix<f64> {
    let raw = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-amplitude..amplitude));
    (&raw + raw.transpose()) * 0.5
}

// ─── tests ───────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Same seed, same path; different seeds, different paths.
    #[test]
    fn draws_are_deterministic() {
        let a = random_path(&mut ChaCha8Rng::seed_from_u64(7), 2);
        let b = random_path(&mut ChaCha8Rng::seed_from_u64(7), 2);
        let c = random_path(&mut ChaCha8Rng::seed_from_u64(8), 2);
        assert_eq!(a.endpoint().entries(), b.endpoint().entries());
        assert!(a.endpoint().entries() != c.endpoint().entries() || a.duration() != c.duration());
    }

    /// The zoo realizes across the dimension range the suites use.
    #[test]
    fn zoo_realizes_all_dimensions() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dim_half in 1..=4 {
            for _ in 0..3 {
                let p = random_path(&mut rng, dim_half);
                assert_eq!(p.dim_half(), dim_half);
                assert!(p.duration() > 0.0);
            }
        }
    }
}

//! Identity and inequality properties of the z-index landscape, checked
//! on reproducible random paths.
//!
//! Each test pins an exact relation between quantities the library
//! computes along independent routes: iterate indices against
//! root-of-unity sums over one profile, splitting-number algebra against
//! side limits, monotonicity under generator domination, and the
//! sandwich between the lower and upper z-index functions.  All values
//! are integers, so every comparison is exact; tolerances appear only
//! where the mean index (a real number) does.
//!
//! Draws that the engine refuses honestly (ambiguous crossing structure,
//! angles inside a proximity band) are skipped and counted; every test
//! asserts that enough draws survived for the property to have been
//! exercised, so a regression that silently refuses everything still
//! fails.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sympl_core::eigen1_normal_form;
use sympl_index::sampling::{random_block_path, random_path, SUITE_RESOLUTION};
use sympl_index::{
    bott, bott_profile, cz_index, defect, oracle::liminf_cz_estimate, sdc_value,
    splitting_numbers, BottProfile, IndexError,
};
use sympl_path::SymplecticPath;

// ─── draw helpers ────────────────────────────────────────────────────────

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Direct sum of positive rotations with continuous weights in
/// (0.6, 1.8) over [0, 1].  Every block contributes at least one crossing
/// at z = 1 and two at z = −1, so μ ≥ n and μ(Γ²) − μ(Γ) = 𝓑(−1) ≥ 2n
/// by construction — a guaranteed supply for the hypotheses that demand
/// index-positive paths.
fn positive_rotation_sum(rng: &mut ChaCha8Rng, dim_half: usize) -> SymplecticPath {
    let blocks: Vec<SymplecticPath> = (0..dim_half)
        .map(|_| {
            let w = rng.random_range(0.6..1.8);
            SymplecticPath::rotation(w, 1.0, SUITE_RESOLUTION).expect("rotation block realizes")
        })
        .collect();
    let refs: Vec<&SymplecticPath> = blocks.iter().collect();
    SymplecticPath::direct_sum(&refs).expect("direct sum realizes")
}

/// Collect paths satisfying μ ≥ n: half guaranteed positive-rotation
/// sums, half random draws filtered by their computed index.
fn index_positive_paths(count: usize, seed: u64) -> Vec<(SymplecticPath, i64)> {
    let mut rng = rng_for(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count / 2 {
        let dim_half = rng.random_range(1..=3);
        let path = positive_rotation_sum(&mut rng, dim_half);
        let mu = cz_index(&path).expect("rotation sums always resolve");
        assert!(mu >= dim_half as i64, "supply paths must satisfy μ ≥ n");
        out.push((path, mu));
    }
    let mut attempts = 0;
    while out.len() < count && attempts < 200 {
        attempts += 1;
        let dim_half = rng.random_range(1..=3);
        let path = random_path(&mut rng, dim_half);
        if let Ok(mu) = cz_index(&path) {
            if mu >= dim_half as i64 {
                out.push((path, mu));
            }
        }
    }
    assert!(
        out.len() >= count.min(count / 2 + 3),
        "filtered supply dried up: {} of {count}",
        out.len()
    );
    out
}

/// 𝓑 point values of the profile along every spectral angle, paired with
/// the splitting numbers computed from side limits.
fn spectral_splittings(
    path: &SymplecticPath,
    profile: &BottProfile,
) -> Result<Vec<(f64, i64, (i64, i64))>, IndexError> {
    profile
        .points()
        .iter()
        .map(|p| Ok((p.theta, p.value, splitting_numbers(path, p.theta)?)))
        .collect()
}

// ─── Bott's iteration formula ────────────────────────────────────────────

/// μ(Γᵏ) computed on the actual iterated path equals the sum of 𝓑 over
/// the k-th roots of unity read off one profile of Γ, for two hundred
/// random paths across half-dimensions one through four and k ≤ 6.
#[test]
fn bott_formula_matches_iterated_paths() {
    let mut rng = rng_for(0x0b07_0001);
    let mut successes = 0usize;
    let mut attempts = 0usize;
    while successes < 200 && attempts < 240 {
        attempts += 1;
        let dim_half = 1 + attempts % 4;
        let path = random_path(&mut rng, dim_half);
        let outcome = (|| -> Result<(), IndexError> {
            let profile = bott_profile(&path)?;
            for k in 1..=6u32 {
                let iterate = path.iterate(k)?;
                let direct = cz_index(&iterate)?;
                assert_eq!(
                    direct,
                    profile.iterate_mu(k),
                    "iterate {k} disagrees with root-of-unity sum (draw {attempts}, n = {dim_half})"
                );
            }
            Ok(())
        })();
        if outcome.is_ok() {
            successes += 1;
        }
    }
    assert!(
        successes >= 200,
        "only {successes} of {attempts} draws resolved"
    );
}

/// The low iterates determine 𝓑 at the low-order roots of unity:
/// 𝓑(−1) = μ(Γ²) − μ(Γ), 2𝓑(e^{2πi/3}) = μ(Γ³) − μ(Γ), and
/// 2𝓑(i) = μ(Γ⁴) − μ(Γ²), using that 𝓑 takes equal values at conjugate
/// points.  Iterate indices come from their own engines, 𝓑 from the
/// base profile.
#[test]
fn roots_of_unity_invert_consistently() {
    let mut rng = rng_for(0x0b07_0002);
    let mut successes = 0usize;
    for attempt in 0..48 {
        let dim_half = 1 + attempt % 3;
        let path = random_path(&mut rng, dim_half);
        let outcome = (|| -> Result<(), IndexError> {
            let profile = bott_profile(&path)?;
            let mu: Vec<i64> = (1..=4u32)
                .map(|k| cz_index(&path.iterate(k)?))
                .collect::<Result<_, _>>()?;
            assert_eq!(profile.value_at(PI), mu[1] - mu[0], "𝓑(−1) vs μ(Γ²) − μ(Γ)");
            assert_eq!(
                2 * profile.value_at(TAU / 3.0),
                mu[2] - mu[0],
                "2𝓑(e^{{2πi/3}}) vs μ(Γ³) − μ(Γ)"
            );
            assert_eq!(
                2 * profile.value_at(FRAC_PI_2),
                mu[3] - mu[1],
                "2𝓑(i) vs μ(Γ⁴) − μ(Γ²)"
            );
            Ok(())
        })();
        if outcome.is_ok() {
            successes += 1;
        }
    }
    assert!(successes >= 40, "only {successes} of 48 draws resolved");
}

// ─── splitting-number algebra ────────────────────────────────────────────

/// Walking the circle from z = 1 and accumulating the one-sided jumps
/// reconstructs the whole profile: each arc value is
/// 𝓑(1) + S⁺₁ + Σ_{φ ≤ θ}(S⁺_φ − S⁻_φ), each point value is the
/// preceding arc value minus S⁻ there, and the walk closes back to the
/// left limit at 1 after a full turn.
#[test]
fn bott_rebuilds_from_accumulated_splittings() {
    let mut rng = rng_for(0x0b07_0003);
    let mut successes = 0usize;
    for attempt in 0..48 {
        let dim_half = 1 + attempt % 3;
        let path = random_path(&mut rng, dim_half);
        let outcome = (|| -> Result<(), IndexError> {
            let profile = bott_profile(&path)?;
            let splittings = spectral_splittings(&path, &profile)?;
            let (s1_plus, s1_minus) = splittings
                .iter()
                .find(|(theta, _, _)| *theta == 0.0)
                .map_or((0, 0), |&(_, _, s)| s);

            let mut running = profile.value_at(0.0) + s1_plus;
            for &(theta, value, (s_plus, s_minus)) in &splittings {
                if theta == 0.0 {
                    continue;
                }
                assert_eq!(
                    value,
                    running - s_minus,
                    "point value at θ = {theta} breaks the accumulated walk"
                );
                // The arc just below the point must carry the running value.
                assert_eq!(
                    profile.value_at(theta - 1e-6),
                    running,
                    "arc below θ = {theta} breaks the accumulated walk"
                );
                running += s_plus - s_minus;
            }
            // Closing the circle lands on the left limit at 1.
            assert_eq!(
                running,
                profile.value_at(0.0) + s1_minus,
                "walk around the full circle does not close"
            );
            Ok(())
        })();
        if outcome.is_ok() {
            successes += 1;
        }
    }
    assert!(successes >= 40, "only {successes} of 48 draws resolved");
}

/// Splitting numbers of an iterate gather those of the base path:
/// S±_z(Γᵏ) = Σ_{wᵏ = z} S±_w(Γ) for k ≤ 4, summed over the k-th roots
/// of each spectral point of the iterate.
#[test]
fn splitting_numbers_multiply_under_iteration() {
    let mut rng = rng_for(0x0b07_0004);
    let mut checked = 0usize;
    for attempt in 0..24 {
        let dim_half = 1 + attempt % 3;
        let path = random_path(&mut rng, dim_half);
        for k in 2..=4u32 {
            let outcome = (|| -> Result<usize, IndexError> {
                let iterate = path.iterate(k)?;
                let iterate_profile = bott_profile(&iterate)?;
                let mut pairs = 0;
                for point in iterate_profile.points() {
                    let (lhs_plus, lhs_minus) = splitting_numbers(&iterate, point.theta)?;
                    let mut rhs_plus = 0;
                    let mut rhs_minus = 0;
                    for j in 0..k {
                        let root = (point.theta + TAU * f64::from(j)) / f64::from(k);
                        let (sp, sm) = splitting_numbers(&path, root)?;
                        rhs_plus += sp;
                        rhs_minus += sm;
                    }
                    assert_eq!(
                        (lhs_plus, lhs_minus),
                        (rhs_plus, rhs_minus),
                        "splitting at θ = {} of iterate {k} is not the root sum",
                        point.theta
                    );
                    pairs += 1;
                }
                Ok(pairs)
            })();
            if let Ok(pairs) = outcome {
                checked += pairs;
            }
        }
    }
    assert!(checked >= 60, "only {checked} spectral points survived");
}

/// Conjugate points swap the one-sided jumps: S±_z = S∓_{z̄}.  At the
/// self-conjugate points ±1 this forces S⁺ = S⁻, and everywhere the
/// jumps stay within [0, ν].
#[test]
fn splitting_numbers_swap_under_conjugation() {
    let mut rng = rng_for(0x0b07_0005);
    let mut checked = 0usize;
    for attempt in 0..48 {
        let dim_half = 1 + attempt % 3;
        let path = random_path(&mut rng, dim_half);
        let outcome = (|| -> Result<usize, IndexError> {
            let profile = bott_profile(&path)?;
            let mut points = 0;
            for p in profile.points() {
                let (s_plus, s_minus) = splitting_numbers(&path, p.theta)?;
                let nu = p.nu as i64;
                assert!(
                    (0..=nu).contains(&s_plus) && (0..=nu).contains(&s_minus),
                    "jump outside [0, ν] at θ = {}",
                    p.theta
                );
                let mirror = (TAU - p.theta).rem_euclid(TAU);
                let (m_plus, m_minus) = splitting_numbers(&path, mirror)?;
                assert_eq!(
                    (s_plus, s_minus),
                    (m_minus, m_plus),
                    "conjugation does not swap the jumps at θ = {}",
                    p.theta
                );
                points += 1;
            }
            Ok(points)
        })();
        if let Ok(points) = outcome {
            checked += points;
        }
    }
    assert!(checked >= 80, "only {checked} spectral points survived");
}

// ─── iteration inequalities ──────────────────────────────────────────────

/// Paths with μ ≥ n iterate monotonically: μ(Γᵏ) + ν(Γᵏ) ≤ μ(Γᵏ⁺¹) for
/// k ≤ 5.
#[test]
fn iterates_grow_monotonically_when_index_dominates_dimension() {
    for (path, mu) in index_positive_paths(36, 0x0b07_0006) {
        let profile = bott_profile(&path).expect("supply paths resolve");
        assert_eq!(profile.iterate_mu(1), mu);
        for k in 1..=5u32 {
            assert!(
                profile.iterate_mu(k) + profile.iterate_nu(k) <= profile.iterate_mu(k + 1),
                "iteration chain breaks at k = {k} (n = {})",
                path.dim_half()
            );
        }
    }
}

/// Paths with μ ≥ n keep their second iterate index-positive:
/// μ(Γ²) + 2S⁺₁(Γ²) − ν(Γ²) ≥ n.
#[test]
fn second_iterate_stays_positive_when_index_dominates() {
    let mut checked = 0usize;
    for (path, _) in index_positive_paths(24, 0x0b07_0007) {
        let double = path.iterate(2).expect("second iterate realizes");
        if let Ok(value) = sdc_value(&double) {
            assert!(
                value >= path.dim_half() as i64,
                "second-iterate value {value} below n = {}",
                path.dim_half()
            );
            checked += 1;
        }
    }
    assert!(checked >= 20, "only {checked} draws resolved");
}

/// The same conclusion follows from an index jump alone: whenever
/// μ(Γ²) − μ(Γ) ≥ n, again μ(Γ²) + 2S⁺₁(Γ²) − ν(Γ²) ≥ n.
#[test]
fn index_jump_forces_second_iterate_positivity() {
    let mut rng = rng_for(0x0b07_0008);
    let mut checked = 0usize;
    let mut attempts = 0usize;
    while checked < 24 && attempts < 120 {
        attempts += 1;
        let dim_half = 1 + attempts % 3;
        let path = if attempts % 2 == 0 {
            positive_rotation_sum(&mut rng, dim_half)
        } else {
            random_path(&mut rng, dim_half)
        };
        let outcome = (|| -> Result<bool, IndexError> {
            let profile = bott_profile(&path)?;
            if profile.iterate_mu(2) - profile.iterate_mu(1) < dim_half as i64 {
                return Ok(false);
            }
            let value = sdc_value(&path.iterate(2)?)?;
            assert!(
                value >= dim_half as i64,
                "second-iterate value {value} below n = {dim_half} despite the index jump"
            );
            Ok(true)
        })();
        if let Ok(true) = outcome {
            checked += 1;
        }
    }
    assert!(checked >= 24, "only {checked} of {attempts} draws qualified");
}

// ─── comparison under generator domination ───────────────────────────────

/// A pointwise-dominating generator yields a pointwise-dominating
/// z-index: if A₁(t) ⪰ A₂(t) for all t then 𝓑₁ ≥ 𝓑₂ everywhere on the
/// circle, checked on a 64-point grid containing ±1 for two hundred
/// random pairs.
#[test]
fn generator_domination_orders_bott_functions() {
    let mut rng = rng_for(0x0b07_0009);
    let mut successes = 0usize;
    let mut attempts = 0usize;
    while successes < 200 && attempts < 230 {
        attempts += 1;
        let dim_half = 1 + attempts % 3;
        let duration = rng.random_range(0.5..1.2);
        let dim = 2 * dim_half;
        let omega = TAU / duration;

        let sym = |rng: &mut ChaCha8Rng, amp: f64| -> DMatrix<f64> {
            let raw = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-amp..amp));
            (&raw + raw.transpose()) * 0.5
        };
        let c0 = sym(&mut rng, 0.8);
        let c1 = sym(&mut rng, 0.8);
        let m1 = rng.random_range(1..=3) as f64;
        let phi = rng.random_range(0.0..TAU);
        let lower = move |t: f64| &c0 + &c1 * (omega * m1 * t + phi).sin();

        // The gap is a strictly positive scalar times a positive-definite
        // matrix, so the upper generator dominates at every time.
        let b = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-0.6..0.6));
        let gap = &b.transpose() * &b + DMatrix::identity(dim, dim) * 0.1;
        let phi2 = rng.random_range(0.0..TAU);
        let lower2 = lower.clone();
        let upper = move |t: f64| lower2(t) + &gap * (0.2 + 0.15 * (omega * t + phi2).sin());

        let outcome = (|| -> Result<(), IndexError> {
            let path_low =
                SymplecticPath::from_generator_fn(lower, dim_half, duration, SUITE_RESOLUTION)?;
            let path_high =
                SymplecticPath::from_generator_fn(upper, dim_half, duration, SUITE_RESOLUTION)?;
            let profile_low = bott_profile(&path_low)?;
            let profile_high = bott_profile(&path_high)?;
            for j in 0..64 {
                let theta = TAU * j as f64 / 64.0;
                assert!(
                    profile_high.value_at(theta) >= profile_low.value_at(theta),
                    "domination fails at θ = {theta} (draw {attempts}, n = {dim_half})"
                );
            }
            Ok(())
        })();
        if outcome.is_ok() {
            successes += 1;
        }
    }
    assert!(
        successes >= 200,
        "only {successes} of {attempts} pairs resolved"
    );
}

// ─── the upper z-index ───────────────────────────────────────────────────

/// The upper function dominates: 𝓑 ≤ 𝓑⁺ everywhere, with equality off
/// the endpoint spectrum and excess exactly ν at spectral points.
#[test]
fn upper_function_dominates_and_matches_off_spectrum() {
    let mut rng = rng_for(0x0b07_000a);
    let mut successes = 0usize;
    for attempt in 0..48 {
        let dim_half = 1 + attempt % 3;
        let path = random_path(&mut rng, dim_half);
        let outcome = (|| -> Result<(), IndexError> {
            let profile = bott_profile(&path)?;
            let inverse_profile = bott_profile(&path.inverse()?)?;
            let upper_at = |theta: f64| -inverse_profile.value_at(theta);

            for j in 0..64 {
                let theta = TAU * j as f64 / 64.0;
                let near_spectrum = profile
                    .points()
                    .iter()
                    .any(|p| sympl_core::circular_distance(p.theta, theta) <= 1e-7);
                if near_spectrum {
                    continue;
                }
                assert_eq!(
                    profile.value_at(theta),
                    upper_at(theta),
                    "𝓑 and 𝓑⁺ differ off the spectrum at θ = {theta}"
                );
            }
            for p in profile.points() {
                assert_eq!(
                    upper_at(p.theta),
                    p.value + p.nu as i64,
                    "𝓑⁺ − 𝓑 is not ν at the spectral point θ = {}",
                    p.theta
                );
            }
            Ok(())
        })();
        if outcome.is_ok() {
            successes += 1;
        }
    }
    assert!(successes >= 40, "only {successes} of 48 draws resolved");
}

// ─── mean index ──────────────────────────────────────────────────────────

/// The mean is the iteration rate: |μ(Γᵏ) − k·μ̂| stays bounded by a
/// constant read off the profile (each spectral point and each arc can
/// misplace at most one root of unity), so μ(Γᵏ)/k converges to μ̂ with
/// an explicit 1/k rate.
#[test]
fn mean_tracks_iterate_growth_rate() {
    let mut rng = rng_for(0x0b07_000b);
    let mut successes = 0usize;
    for attempt in 0..36 {
        let dim_half = 1 + attempt % 3;
        let path = random_path(&mut rng, dim_half);
        let outcome = (|| -> Result<(), IndexError> {
            let profile = bott_profile(&path)?;
            let mean = profile.mean();
            let spread = profile
                .points()
                .iter()
                .map(|p| p.value)
                .chain(profile.arcs().iter().map(|a| a.value))
                .fold((i64::MAX, i64::MIN), |(lo, hi), v| (lo.min(v), hi.max(v)));
            let bound =
                2.0 * (profile.points().len() + 1) as f64 * (spread.1 - spread.0).max(1) as f64;
            for k in [60u32, 360, 2520] {
                let drift = (profile.iterate_mu(k) as f64 - f64::from(k) * mean).abs();
                assert!(
                    drift <= bound,
                    "iterate {k} drifts {drift} from k·μ̂ (bound {bound})"
                );
            }
            Ok(())
        })();
        if outcome.is_ok() {
            successes += 1;
        }
    }
    assert!(successes >= 30, "only {successes} of 36 draws resolved");
}

// ─── independent routes ──────────────────────────────────────────────────

/// The slow perturbation estimator agrees with the engine on random
/// paths of half-dimension up to three.
#[test]
fn perturbation_estimate_confirms_engine_on_random_paths() {
    let mut rng = rng_for(0x0b07_000c);
    let mut successes = 0usize;
    for attempt in 0..9u64 {
        let dim_half = 1 + (attempt as usize) % 3;
        let path = random_path(&mut rng, dim_half);
        let mu = match cz_index(&path) {
            Ok(mu) => mu,
            Err(_) => continue,
        };
        match liminf_cz_estimate(&path, 600, 0x5eed_1000 + attempt) {
            Ok(estimate) => {
                assert_eq!(estimate, mu, "estimator disagrees on draw {attempt}");
                successes += 1;
            }
            Err(_) => continue,
        }
    }
    assert!(successes >= 7, "only {successes} of 9 draws resolved");
}

/// The defect 2S⁺₁ − ν₁ recombines the endpoint's eigenvalue-one block
/// counts as b₋ − b₊, computed by completely separate machinery (crossing
/// counts on the path versus a normal form of the single endpoint
/// matrix).
#[test]
fn defect_recombines_endpoint_normal_form() {
    let mut rng = rng_for(0x0b07_000d);
    let mut checked = 0usize;
    let mut nontrivial = 0usize;
    for attempt in 0..60 {
        let dim_half = 1 + attempt % 3;
        let path = random_block_path(&mut rng, dim_half);
        let Ok(decomposition) = eigen1_normal_form(path.endpoint()) else {
            continue;
        };
        let Ok(d) = defect(&path) else { continue };
        assert_eq!(
            d,
            decomposition.b_defect(),
            "defect and normal-form route disagree (draw {attempt})"
        );
        checked += 1;
        if decomposition.dim_v > 0 {
            nontrivial += 1;
        }
    }
    assert!(checked >= 40, "only {checked} of 60 draws resolved");
    assert!(
        nontrivial >= 10,
        "only {nontrivial} draws had eigenvalue one at all"
    );
}

/// Angles within the proximity band of an endpoint eigenvalue — but not
/// identified with it — are refused with the distance, never answered.
#[test]
fn proximity_band_refuses_sides() {
    let path = SymplecticPath::rotation(0.5, 1.0, SUITE_RESOLUTION).unwrap();
    match bott(&path, PI - 1e-8) {
        Err(IndexError::SpectralProximity { distance, .. }) => {
            assert!((distance - 1e-8).abs() < 1e-10, "distance {distance}");
        }
        other => panic!("expected a proximity refusal, got {other:?}"),
    }
    // Identified (snapped) and well-separated angles both answer: the
    // eigenvalue pair reaches −1 exactly at the terminal time, so the
    // on-point value stays at 0 (a positive-weight terminal crossing
    // does not count) while the side value picks the crossing up.
    assert_eq!(bott(&path, PI).unwrap(), 0);
    assert_eq!(bott(&path, PI - 1e-3).unwrap(), 1);
}

// ─── fuzzing beyond the fixed seeds ──────────────────────────────────────

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Fresh random paths every run keep the sandwich 𝓑 ≤ 𝓑⁺ and the
    /// splitting-walk closure; honest refusals are discarded draws, not
    /// failures.
    #[test]
    fn fuzzed_paths_keep_sandwich_and_closure(seed in any::<u64>(), dim_half in 1usize..=3) {
        let path = random_path(&mut rng_for(seed), dim_half);
        let Ok(profile) = bott_profile(&path) else { return Ok(()); };
        let Ok(inverse) = path.inverse() else { return Ok(()); };
        let Ok(inverse_profile) = bott_profile(&inverse) else { return Ok(()); };

        for j in 0..16 {
            let theta = TAU * j as f64 / 16.0;
            prop_assert!(profile.value_at(theta) <= -inverse_profile.value_at(theta),
                "sandwich fails at θ = {theta}");
        }

        let Ok(splittings) = spectral_splittings(&path, &profile) else { return Ok(()); };
        let mut swing = 0;
        for &(_, _, (s_plus, s_minus)) in &splittings {
            swing += s_plus - s_minus;
        }
        prop_assert_eq!(swing, 0, "jumps around the full circle must cancel");
    }
}

//! Public index operations and the aggregate [`IndexReport`].
//!
//! Every operation realizes the same recipe: build an [`Engine`] for the
//! path (endpoint spectrum, invariant blocks, detection grids), answer
//! z-index queries through the two-tier scan, and derive the requested
//! invariant.  The report bundles one engine's answers for every
//! distinguished circle point so downstream consumers see a single
//! consistent snapshot.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use sympl_path::SymplecticPath;

use crate::engine::{canon_theta, Engine};
use crate::error::IndexError;
use crate::profile::{BottProfile, ProfileArc, ProfilePoint};

// ─── single-value operations ─────────────────────────────────────────────

/// The index μ(Γ) = 𝓑(1): the z-index at z = 1 under the
/// lower-semicontinuous endpoint convention.
pub fn cz_index(path: &SymplecticPath) -> Result<i64, IndexError> {
    let mut engine = Engine::new(path)?;
    engine.bott_at(0.0, true)
}

/// The z-index 𝓑(e^{iθ}).  Angles inside the proximity band of an
/// endpoint eigenvalue (but not identified with it) are refused.
pub fn bott(path: &SymplecticPath, theta: f64) -> Result<i64, IndexError> {
    let mut engine = Engine::new(path)?;
    engine.bott_at(theta, false)
}

/// The upper z-index 𝓑⁺(e^{iθ}) = −𝓑_{Γ⁻¹}(e^{iθ}), the upper
/// semicontinuous partner of 𝓑.
pub fn bott_plus(path: &SymplecticPath, theta: f64) -> Result<i64, IndexError> {
    let inverse = path.inverse()?;
    let mut engine = Engine::new(&inverse)?;
    Ok(-engine.bott_at(theta, false)?)
}

/// Splitting numbers (S⁺, S⁻) at e^{iθ}: the one-sided jumps
/// 𝓑(e^{i(θ±0)}) − 𝓑(e^{iθ}).  Non-eigenvalue angles split trivially.
pub fn splitting_numbers(path: &SymplecticPath, theta: f64) -> Result<(i64, i64), IndexError> {
    let mut engine = Engine::new(path)?;
    engine.splitting_at(theta)
}

/// The geometric multiplicity ν of e^{iθ} as an endpoint eigenvalue.
pub fn nullity(path: &SymplecticPath, theta: f64) -> Result<usize, IndexError> {
    let engine = Engine::new(path)?;
    Ok(engine.nu_at(theta))
}

/// The defect 2·S⁺₁ − ν₁, the gap by which the eigenvalue-1 part of the
/// endpoint fails positive semidefiniteness of its generating function.
pub fn defect(path: &SymplecticPath) -> Result<i64, IndexError> {
    let mut engine = Engine::new(path)?;
    defect_of(&mut engine)
}

/// μ + defect: nonnegativity of this value for the second iterate is the
/// strong dynamical convexity test.
pub fn sdc_value(path: &SymplecticPath) -> Result<i64, IndexError> {
    let mut engine = Engine::new(path)?;
    Ok(engine.bott_at(0.0, true)? + defect_of(&mut engine)?)
}

/// The mean index μ̂ = (2π)⁻¹ ∫ 𝓑(e^{iθ}) dθ = lim μ(Γᵏ)/k, computed as
/// the circle average of the profile.
pub fn mean_index(path: &SymplecticPath) -> Result<f64, IndexError> {
    Ok(bott_profile(path)?.mean())
}

fn defect_of(engine: &mut Engine<'_>) -> Result<i64, IndexError> {
    let nu1 = engine.nu_at(0.0) as i64;
    let (s_plus, _) = engine.splitting_at(0.0)?;
    Ok(2 * s_plus - nu1)
}

// ─── profile assembly ────────────────────────────────────────────────────

/// Evaluate the full z-index profile: every spectral point of the
/// endpoint plus the constant value of every open arc between them.
pub fn bott_profile(path: &SymplecticPath) -> Result<BottProfile, IndexError> {
    let mut engine = Engine::new(path)?;
    build_profile(&mut engine)
}

pub(crate) fn build_profile(engine: &mut Engine<'_>) -> Result<BottProfile, IndexError> {
    let spectral: Vec<(f64, usize, usize)> = engine
        .spectrum
        .points
        .iter()
        .map(|p| (p.theta, p.nu, p.eta))
        .collect();

    if spectral.is_empty() {
        let value = engine.bott_at(PI, true)?;
        return Ok(BottProfile::from_parts(
            engine.dim_half(),
            engine.duration(),
            Vec::new(),
            vec![ProfileArc {
                lo: 0.0,
                hi: TAU,
                value,
            }],
        ));
    }

    let mut points = Vec::with_capacity(spectral.len());
    for &(theta, nu, eta) in &spectral {
        points.push(ProfilePoint {
            theta,
            nu,
            eta,
            value: engine.bott_at(theta, true)?,
        });
    }

    let mut arcs = Vec::with_capacity(spectral.len());
    for i in 0..spectral.len() {
        let lo = spectral[i].0;
        let hi = if i + 1 < spectral.len() {
            spectral[i + 1].0
        } else {
            spectral[0].0 + TAU
        };
        let value = engine.bott_at(0.5 * (lo + hi), true)?;
        arcs.push(ProfileArc { lo, hi, value });
    }

    Ok(BottProfile::from_parts(
        engine.dim_half(),
        engine.duration(),
        points,
        arcs,
    ))
}

// ─── the aggregate report ────────────────────────────────────────────────

/// Everything the index machinery knows about one path, keyed by circle
/// angles.  The angle set is {0, π} ∪ spectral angles; the 𝓑/𝓑⁺ maps
/// additionally sample every open arc at its midpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexReport {
    /// μ(Γ) = 𝓑(1).
    pub mu: i64,
    /// μ_RS = μ + ν₁/2, the symmetric-endpoint-convention index.
    pub mu_rs: f64,
    /// Mean index μ̂.
    pub mean: f64,
    /// Geometric multiplicity ν_z, keyed by angle.
    pub nu_z: Vec<(f64, i64)>,
    /// Algebraic multiplicity η_z, keyed by angle.
    pub eta_z: Vec<(f64, i64)>,
    /// 𝓑(e^{iθ}) samples (spectral angles and arc midpoints).
    pub bott: Vec<(f64, i64)>,
    /// 𝓑⁺(e^{iθ}) samples at the same angles.
    pub bott_plus: Vec<(f64, i64)>,
    /// Splitting numbers (S⁺, S⁻), keyed by angle.
    pub splitting: Vec<(f64, (i64, i64))>,
    /// 2·S⁺₁ − ν₁.
    pub defect: i64,
}

/// Compute the full report with one engine pass (plus one pass over the
/// inverse path for 𝓑⁺).
pub fn index_report(path: &SymplecticPath) -> Result<IndexReport, IndexError> {
    let mut engine = Engine::new(path)?;
    let profile = build_profile(&mut engine)?;

    let mu = engine.bott_at(0.0, true)?;
    let nu1 = engine.nu_at(0.0) as i64;
    let mu_rs = mu as f64 + nu1 as f64 / 2.0;
    let mean = profile.mean();

    // Key set: the two real points always, plus every spectral angle.
    let mut keys: Vec<f64> = vec![0.0, PI];
    for p in profile.points() {
        if p.theta != 0.0 && p.theta != PI {
            keys.push(p.theta);
        }
    }
    keys.sort_by(|a, b| a.partial_cmp(b).expect("angles are finite"));

    // 𝓑/𝓑⁺ sample set: keys plus arc midpoints.
    let mut sample_angles = keys.clone();
    for a in profile.arcs() {
        sample_angles.push(canon_theta(0.5 * (a.lo + a.hi)));
    }
    sample_angles.sort_by(|a, b| a.partial_cmp(b).expect("angles are finite"));
    sample_angles.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);

    let inverse = path.inverse()?;
    let mut inv_engine = Engine::new(&inverse)?;

    let mut nu_z = Vec::new();
    let mut eta_z = Vec::new();
    let mut splitting = Vec::new();
    for &theta in &keys {
        nu_z.push((theta, engine.nu_at(theta) as i64));
        eta_z.push((theta, engine.eta_at(theta) as i64));
        splitting.push((theta, engine.splitting_at(theta)?));
    }

    let mut bott = Vec::new();
    let mut bott_plus = Vec::new();
    for &theta in &sample_angles {
        let b = engine.bott_at(theta, true)?;
        let b_plus = -inv_engine.bott_at(theta, true)?;
        bott.push((theta, b));
        bott_plus.push((theta, b_plus));
    }

    let s1_plus = splitting
        .iter()
        .find(|(t, _)| *t == 0.0)
        .map(|(_, s)| s.0)
        .expect("0 is always a key");
    let defect = 2 * s1_plus - nu1;

    let report = IndexReport {
        mu,
        mu_rs,
        mean,
        nu_z,
        eta_z,
        bott,
        bott_plus,
        splitting,
        defect,
    };
    debug_assert_report_invariants(&report);
    Ok(report)
}

/// Structural invariants every report must satisfy; violations are bugs
/// in the machinery, not properties of the input.
fn debug_assert_report_invariants(r: &IndexReport) {
    for (i, &(theta, (sp, sm))) in r.splitting.iter().enumerate() {
        let nu = r.nu_z[i].1;
        let eta = r.eta_z[i].1;
        debug_assert!(
            (0..=nu).contains(&sp) && (0..=nu).contains(&sm),
            "splitting numbers at θ = {theta} outside [0, ν]"
        );
        debug_assert!(nu <= eta, "ν > η at θ = {theta}");
        if theta == 0.0 || theta == PI {
            debug_assert!(
                2 * (nu - sp) <= eta && 2 * (nu - sm) <= eta,
                "real-point multiplicity bound violated at θ = {theta}"
            );
        }
    }
    for (&(ta, b), &(tb, bp)) in r.bott.iter().zip(&r.bott_plus) {
        debug_assert!(ta == tb && b <= bp, "𝓑 > 𝓑⁺ at θ = {ta}");
    }
}

//! Unit-circle spectra of symplectic matrices, with multiplicities.
//!
//! The spectrum of M ∈ Sp(2n) is symmetric under λ ↦ λ̄ and λ ↦ 1/λ, so the
//! part relevant to index theory lives on the unit circle. This module
//! clusters the computed eigenvalues, decides which clusters sit on the
//! circle, and reports for each circle cluster its angle θ ∈ [0, 2π),
//! geometric multiplicity ν (numerical kernel of M − zI), and algebraic
//! multiplicity η (cluster population).
//!
//! Defective eigenvalues are the numerically delicate case: a size-k Jordan
//! block splays into k computed eigenvalues spread ~ε_mach^{1/k} around the
//! true value — far wider than any honest clustering tolerance. Clusters
//! are therefore merged by a resolvent test: two nearby clusters are one
//! eigenvalue exactly when σ_min(M − z_mid I) vanishes at their joint
//! center, which holds for a splayed block (the star of computed roots is
//! centered on the true eigenvalue) and fails for genuinely distinct
//! eigenvalues.

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::matrix::SymplecticMatrix;

/// Default clustering tolerance for [`circle_spectrum`].
pub const SPECTRUM_TOL: f64 = 1e-8;

/// Rank threshold factor for geometric multiplicities: kernel dimensions
/// count singular values below 1e-8·σ_max(M).
const RANK_FACTOR: f64 = 1e-8;

/// Only cluster pairs closer than this are candidates for resolvent
/// merging. It must exceed the worst Jordan splay (~ε_mach^{1/8} ≈ 1e-2
/// for size-8 chains); merging itself is decided by the resolvent test,
/// so a generous radius never conflates genuinely distinct eigenvalues.
const MERGE_RADIUS: f64 = 5e-2;

/// Resolvent threshold factor: clusters merge when σ_min(M − z_mid I)
/// drops below 1e-9·σ_max(M) at their joint center.
const MERGE_FACTOR: f64 = 1e-9;

/// One unit-circle eigenvalue cluster of a symplectic matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    /// Angle of the eigenvalue z = e^{iθ}, in [0, 2π).
    pub theta: f64,
    /// Geometric multiplicity ν_z = dim ker(M − zI) ≥ 1.
    pub nu: usize,
    /// Algebraic multiplicity η_z ≥ ν_z.
    pub eta: usize,
}

/// Unit-circle spectrum of a symplectic matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleSpectrum {
    /// Circle clusters sorted by increasing angle.
    pub points: Vec<SpectrumPoint>,
    /// Number of eigenvalues (with multiplicity) off the unit circle.
    pub off_circle_count: usize,
}

impl CircleSpectrum {
    /// Σ η over all circle points.
    #[must_use]
    pub fn total_eta(&self) -> usize {
        self.points.iter().map(|p| p.eta).sum()
    }

    /// The point whose angle matches `theta` within `atol` (circularly).
    #[must_use]
    pub fn point_near(&self, theta: f64, atol: f64) -> Option<&SpectrumPoint> {
        self.points
            .iter()
            .find(|p| circular_distance(p.theta, theta) <= atol)
    }

    /// ν at angle `theta` (0 when no eigenvalue sits there).
    #[must_use]
    pub fn nu_near(&self, theta: f64, atol: f64) -> usize {
        self.point_near(theta, atol).map_or(0, |p| p.nu)
    }
}

/// Distance between two angles on the circle, in radians.
#[must_use]
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let d = (a - b).rem_euclid(two_pi);
    d.min(two_pi - d)
}

/// σ_min of the complex matrix M − zI.
fn sigma_min_shifted(m: &DMatrix<f64>, z: Complex<f64>) -> f64 {
    let n = m.nrows();
    let mut shifted: DMatrix<Complex<f64>> = m.map(|x| Complex::new(x, 0.0));
    for i in 0..n {
        shifted[(i, i)] -= z;
    }
    let sv = shifted.svd(false, false).singular_values;
    sv[sv.len() - 1]
}

/// dim ker(M − zI) counted as singular values below `threshold`.
fn kernel_dim_shifted(m: &DMatrix<f64>, z: Complex<f64>, threshold: f64) -> usize {
    let n = m.nrows();
    let mut shifted: DMatrix<Complex<f64>> = m.map(|x| Complex::new(x, 0.0));
    for i in 0..n {
        shifted[(i, i)] -= z;
    }
    let sv = shifted.svd(false, false).singular_values;
    sv.iter().filter(|&&s| s < threshold).count()
}

/// Multiset center: the plain mean of the members. For the splayed star of
/// a defective eigenvalue this recovers the true eigenvalue to backward
/// error, which is exactly the probe point the resolvent test needs.
fn cluster_center(members: &[Complex<f64>]) -> Complex<f64> {
    let sum: Complex<f64> = members.iter().sum();
    sum / members.len() as f64
}

/// Compute the unit-circle spectrum of `m`, clustering eigenvalues at
/// tolerance `tol` (chordal distance) and deciding on/off circle at the
/// same tolerance.
///
/// Errors with [`CoreError::ClusterAmbiguity`] when two distinct clusters
/// end up closer than 2·tol, or when an eigenvalue's distance to the circle
/// falls in the undecidable band (tol, 2·tol].
pub fn circle_spectrum(m: &SymplecticMatrix, tol: f64) -> Result<CircleSpectrum, CoreError> {
    let entries = m.entries();
    let n = entries.nrows();
    let scale = entries.clone().svd(false, false).singular_values[0];
    let eigs: Vec<Complex<f64>> = entries.complex_eigenvalues().iter().copied().collect();

    // Initial clustering of ALL eigenvalues by chordal linkage at `tol`.
    // The on/off-circle decision is made per cluster afterwards: the
    // members of a defective eigenvalue splay radially far beyond any
    // honest tolerance, so individual radial distances mean nothing.
    let mut clusters: Vec<Vec<Complex<f64>>> = Vec::new();
    for lambda in eigs {
        match clusters
            .iter_mut()
            .find(|c| c.iter().any(|&mu| (mu - lambda).norm() <= tol))
        {
            Some(c) => c.push(lambda),
            None => clusters.push(vec![lambda]),
        }
    }

    // Resolvent merge: absorb Jordan splay into single clusters.
    let merge_tol = MERGE_FACTOR * scale;
    loop {
        let mut merged_any = false;
        'outer: for i in 0..clusters.len() {
            for j in (i + 1)..clusters.len() {
                let ci = cluster_center(&clusters[i]);
                let cj = cluster_center(&clusters[j]);
                if (ci - cj).norm() > MERGE_RADIUS {
                    continue;
                }
                let joint: Vec<Complex<f64>> = clusters[i]
                    .iter()
                    .chain(clusters[j].iter())
                    .copied()
                    .collect();
                let center = cluster_center(&joint);
                if sigma_min_shifted(entries, center) <= merge_tol {
                    let absorbed = clusters.swap_remove(j);
                    clusters[i].extend(absorbed);
                    merged_any = true;
                    break 'outer;
                }
            }
        }
        if !merged_any {
            break;
        }
    }

    // Distinct clusters must be separated by at least 2·tol.
    for i in 0..clusters.len() {
        for j in (i + 1)..clusters.len() {
            let d = (cluster_center(&clusters[i]) - cluster_center(&clusters[j])).norm();
            if d < 2.0 * tol {
                return Err(CoreError::ClusterAmbiguity {
                    distance: d,
                    required: 2.0 * tol,
                });
            }
        }
    }

    // Per-cluster on/off-circle decision, with an explicit refusal band.
    let mut off_count = 0usize;
    let mut circle_clusters: Vec<&Vec<Complex<f64>>> = Vec::new();
    for c in &clusters {
        let radial = (cluster_center(c).norm() - 1.0).abs();
        if radial <= tol {
            circle_clusters.push(c);
        } else if radial <= 2.0 * tol {
            return Err(CoreError::ClusterAmbiguity {
                distance: radial,
                required: 2.0 * tol,
            });
        } else {
            off_count += c.len();
        }
    }

    // Angles, with exact snapping of conjugate-closed clusters to {0, π}.
    let two_pi = std::f64::consts::TAU;
    let mut raw: Vec<(f64, usize)> = Vec::new(); // (theta, eta)
    for c in &circle_clusters {
        let center = cluster_center(c);
        let mut theta = center.arg().rem_euclid(two_pi);
        if theta < 1e-9 || two_pi - theta < 1e-9 {
            theta = 0.0;
        } else if (theta - std::f64::consts::PI).abs() < 1e-9 {
            theta = std::f64::consts::PI;
        }
        raw.push((theta, c.len()));
    }
    raw.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Conjugate symmetry: compute ν once per mirror pair.
    let rank_threshold = RANK_FACTOR * scale;
    let mut points: Vec<SpectrumPoint> = Vec::new();
    for &(theta, eta) in &raw {
        if theta > std::f64::consts::PI + 1e-12 {
            continue; // handled through its mirror below
        }
        let z = Complex::new(theta.cos(), theta.sin());
        let nu = kernel_dim_shifted(entries, z, rank_threshold);
        if nu < 1 || nu > eta {
            return Err(CoreError::RankAmbiguity {
                detail: format!(
                    "geometric multiplicity {nu} at angle {theta:.6} outside [1, {eta}]"
                ),
            });
        }
        points.push(SpectrumPoint { theta, nu, eta });
        if theta > 1e-12 && (theta - std::f64::consts::PI).abs() > 1e-12 {
            let mirror = two_pi - theta;
            let mirror_eta = raw
                .iter()
                .find(|&&(t, _)| (t - mirror).abs() < 1e-9)
                .map(|&(_, e)| e);
            match mirror_eta {
                Some(e) if e == eta => points.push(SpectrumPoint {
                    theta: mirror,
                    nu,
                    eta,
                }),
                _ => {
                    return Err(CoreError::RankAmbiguity {
                        detail: format!(
                            "conjugate symmetry broken at angle {theta:.6}: mirror cluster missing or multiplicity mismatch"
                        ),
                    })
                }
            }
        }
    }
    points.sort_by(|a, b| a.theta.total_cmp(&b.theta));

    let spectrum = CircleSpectrum {
        points,
        off_circle_count: off_count,
    };
    debug_assert_eq!(spectrum.total_eta() + spectrum.off_circle_count, n);
    Ok(spectrum)
}

// ─────────────────────────────── tests ───────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{matrix_exp, standard_j, SymplecticMatrix};
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spectrum(m: &SymplecticMatrix) -> CircleSpectrum {
        circle_spectrum(m, SPECTRUM_TOL).expect("spectrum must resolve")
    }

    #[test]
    fn plain_shear_is_one_defective_point_at_angle_zero() {
        let s = spectrum(&SymplecticMatrix::shear_block(1.0));
        assert_eq!(s.points.len(), 1);
        assert_eq!(s.points[0].theta, 0.0);
        assert_eq!(s.points[0].nu, 1, "shear has a single eigenvector");
        assert_eq!(s.points[0].eta, 2);
        assert_eq!(s.off_circle_count, 0);
    }

    #[test]
    fn conjugated_shear_still_clusters_despite_eigenvalue_splay() {
        // Conjugation spreads the computed double eigenvalue ~1e-8 around 1;
        // the resolvent merge must still report a single cluster.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let c = crate::matrix::tests::random_symplectic(&mut rng, 2);
            let block = SymplecticMatrix::direct_sum(&[
                SymplecticMatrix::shear_block(1.0),
                SymplecticMatrix::rotation_block(2.0),
            ]);
            let m = SymplecticMatrix::new_unchecked(
                c.entries() * block.entries() * c.inverse().entries(),
            );
            let s = circle_spectrum(&m, SPECTRUM_TOL).expect("conjugated shear spectrum");
            let at_one = s.point_near(0.0, 1e-6).expect("cluster at one");
            assert_eq!((at_one.nu, at_one.eta), (1, 2));
            assert_eq!(s.total_eta(), 4);
        }
    }

    #[test]
    fn rotation_pair_lands_at_mirror_angles() {
        let s = spectrum(&SymplecticMatrix::rotation_block(0.7));
        assert_eq!(s.points.len(), 2);
        assert!((s.points[0].theta - 0.7).abs() < 1e-12);
        assert!((s.points[1].theta - (std::f64::consts::TAU - 0.7)).abs() < 1e-12);
        assert_eq!((s.points[0].nu, s.points[0].eta), (1, 1));
        assert_eq!((s.points[1].nu, s.points[1].eta), (1, 1));
    }

    #[test]
    fn hyperbolic_block_is_entirely_off_circle() {
        let m = SymplecticMatrix::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]))
            .expect("diag(2, 1/2) is symplectic");
        let s = spectrum(&m);
        assert!(s.points.is_empty());
        assert_eq!(s.off_circle_count, 2);
    }

    #[test]
    fn minus_identity_snaps_to_angle_pi() {
        let m = SymplecticMatrix::new(-DMatrix::<f64>::identity(4, 4)).unwrap();
        let s = spectrum(&m);
        assert_eq!(s.points.len(), 1);
        assert_eq!(s.points[0].theta, std::f64::consts::PI);
        assert_eq!((s.points[0].nu, s.points[0].eta), (4, 4));
    }

    #[test]
    fn mixed_direct_sum_accounts_for_every_eigenvalue() {
        let m = SymplecticMatrix::direct_sum(&[
            SymplecticMatrix::rotation_block(1.1),
            SymplecticMatrix::shear_block(-2.0),
            SymplecticMatrix::new(DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0 / 3.0]))
                .unwrap(),
        ]);
        let s = spectrum(&m);
        assert_eq!(s.total_eta(), 4);
        assert_eq!(s.off_circle_count, 2);
        assert_eq!(s.nu_near(0.0, 1e-9), 1);
        assert_eq!(s.point_near(0.0, 1e-9).unwrap().eta, 2);
        assert_eq!(s.nu_near(1.1, 1e-9), 1);
    }

    #[test]
    fn deliberately_close_distinct_clusters_refuse() {
        // Two genuine rotations 1.5·tol apart in angle: distinct by the
        // resolvent, too close to certify multiplicities.
        let gap = 1.5 * SPECTRUM_TOL;
        let m = SymplecticMatrix::direct_sum(&[
            SymplecticMatrix::rotation_block(1.0),
            SymplecticMatrix::rotation_block(1.0 + gap),
        ]);
        let err = circle_spectrum(&m, SPECTRUM_TOL);
        assert!(matches!(err, Err(CoreError::ClusterAmbiguity { .. })));
    }

    #[test]
    fn power_multiplicities_add_over_roots() {
        // ν_z(M^k) = Σ_{w^k = z} ν_w(M) for circle-only spectra.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let angles: Vec<f64> = (0..3).map(|_| rng.random_range(0.1..3.0)).collect();
            let blocks: Vec<SymplecticMatrix> = angles
                .iter()
                .map(|&a| SymplecticMatrix::rotation_block(a))
                .collect();
            let m = SymplecticMatrix::direct_sum(&blocks);
            for k in 2..=6u32 {
                let mk = m.pow(k);
                let s_base = spectrum(&m);
                let s_pow = match circle_spectrum(&mk, SPECTRUM_TOL) {
                    Ok(s) => s,
                    // Powers can push two rotations inside the refusal band;
                    // that is a legitimate refusal, not a failure.
                    Err(CoreError::ClusterAmbiguity { .. }) => continue,
                    Err(e) => panic!("unexpected spectrum error: {e}"),
                };
                for p in &s_pow.points {
                    let nu_sum: usize = s_base
                        .points
                        .iter()
                        .filter(|q| {
                            circular_distance(
                                (q.theta * k as f64).rem_euclid(std::f64::consts::TAU),
                                p.theta,
                            ) < 1e-6
                        })
                        .map(|q| q.nu)
                        .sum();
                    assert_eq!(
                        p.nu, nu_sum,
                        "power-spectrum multiplicity mismatch at angle {}",
                        p.theta
                    );
                }
            }
        }
    }

    #[test]
    fn defective_size_four_block_reports_full_algebraic_multiplicity() {
        // exp(J·Q₊) with one size-4 Jordan chain at eigenvalue 1, conjugated
        // into a random frame: splay radius ~1e-4, far beyond tol.
        let mut q = DMatrix::<f64>::zeros(4, 4);
        // Q₊(d=2) = p₁q₂ + p₂²/2 in interleaved coordinates (q₁,p₁,q₂,p₂).
        q[(1, 2)] = 1.0;
        q[(2, 1)] = 1.0;
        q[(3, 3)] = 1.0;
        let block = matrix_exp(&(standard_j(2) * q));
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let c = crate::matrix::tests::random_symplectic(&mut rng, 2);
        let m = SymplecticMatrix::new_unchecked(c.entries() * block * c.inverse().entries());
        let s = spectrum(&m);
        assert_eq!(s.points.len(), 1);
        assert_eq!(s.points[0].theta, 0.0);
        assert_eq!(s.points[0].eta, 4);
        assert_eq!(s.points[0].nu, 1);
    }
}

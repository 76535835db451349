//! The complete z-index profile of a path over the unit circle.
//!
//! 𝓑(e^{iθ}) is piecewise constant: it can jump only at angles in the
//! endpoint spectrum.  A [`BottProfile`] therefore stores the finitely
//! many spectral points (with their multiplicities and on-point values)
//! and the constant value of every open arc between consecutive points.
//! From this data the index of **every** iterate follows by bookkeeping
//! — the index of the k-th iterate is the sum of 𝓑 over the k-th roots
//! of unity —
//!
//! > μ(Γᵏ) = Σ_{zᵏ = 1} 𝓑(z),
//!
//! so one profile answers all k up to the floating-point horizon without
//! ever constructing an iterated path.  The circle average of the same
//! data is the mean index μ̂ = (2π)⁻¹ ∫ 𝓑(e^{iθ}) dθ.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Root-of-unity coincidence margin (radians): angle kθ counts as 0
/// (mod 2π) when it lands within k times this of a multiple of 2π.  It
/// is far below the spacing 2π/(k·q) of distinct rational spectra at
/// any tested k, and far above accumulated f64 rounding.
const ROOT_MARGIN: f64 = 1e-9;

/// One spectral angle of the endpoint with its multiplicities and the
/// on-point z-index value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    /// Angle in [0, 2π).
    pub theta: f64,
    /// Geometric multiplicity ν of e^{iθ}.
    pub nu: usize,
    /// Algebraic multiplicity η of e^{iθ}.
    pub eta: usize,
    /// 𝓑(e^{iθ}).
    pub value: i64,
}

/// One maximal open arc between consecutive spectral angles, carrying
/// the constant z-index value of its interior.  The bounds satisfy
/// lo < hi with hi ≤ lo + 2π; the wrap-around arc stores hi > 2π.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileArc {
    /// Lower bound (a spectral angle, or 0 for a spectrum-free circle).
    pub lo: f64,
    /// Upper bound; may exceed 2π on the wrap-around arc.
    pub hi: f64,
    /// 𝓑 on the open interior.
    pub value: i64,
}

/// The full z-index landscape of a path: every spectral point and every
/// open arc of the circle, with values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BottProfile {
    dim_half: usize,
    duration: f64,
    points: Vec<ProfilePoint>,
    arcs: Vec<ProfileArc>,
}

impl BottProfile {
    /// Assemble a profile from sorted points and covering arcs.  Callers
    /// inside the crate guarantee the geometry; this constructor only
    /// rechecks it in debug builds.
    pub(crate) fn from_parts(
        dim_half: usize,
        duration: f64,
        points: Vec<ProfilePoint>,
        arcs: Vec<ProfileArc>,
    ) -> Self {
        debug_assert!(points.windows(2).all(|w| w[0].theta < w[1].theta));
        debug_assert!(arcs.iter().all(|a| a.lo < a.hi && a.hi <= a.lo + TAU));
        debug_assert!(
            (arcs.iter().map(|a| a.hi - a.lo).sum::<f64>() - TAU).abs() < 1e-9,
            "arcs must cover the circle"
        );
        Self {
            dim_half,
            duration,
            points,
            arcs,
        }
    }

    /// Number of coordinate pairs n of the underlying path.
    #[must_use]
    pub fn dim_half(&self) -> usize {
        self.dim_half
    }

    /// Duration T of the underlying path.
    #[must_use]
    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// The spectral points in increasing angle order.
    #[must_use]
    pub fn points(&self) -> &[ProfilePoint] {
        &self.points
    }

    /// The open arcs in increasing order, the last one wrapping.
    #[must_use]
    pub fn arcs(&self) -> &[ProfileArc] {
        &self.arcs
    }

    /// 𝓑(e^{iθ}): the point value within the snap width of a spectral
    /// angle, otherwise the value of the containing arc.
    #[must_use]
    pub fn value_at(&self, theta: f64) -> i64 {
        let t = theta.rem_euclid(TAU);
        for p in &self.points {
            let d = (p.theta - t).abs();
            if d.min(TAU - d) <= 1e-9 {
                return p.value;
            }
        }
        for a in &self.arcs {
            let tt = if t < a.lo { t + TAU } else { t };
            if a.lo < tt && tt < a.hi {
                return a.value;
            }
        }
        // Float edge between an arc bound and the point snap; take the
        // nearest arc rather than panicking over a 1e-9 sliver.
        self.arcs
            .iter()
            .map(|a| {
                let tt = if t < a.lo { t + TAU } else { t };
                let d = if tt < a.lo {
                    a.lo - tt
                } else if tt > a.hi {
                    tt - a.hi
                } else {
                    0.0
                };
                (d, a.value)
            })
            .min_by(|x, y| x.0.partial_cmp(&y.0).expect("distances are finite"))
            .map(|(_, v)| v)
            .expect("profile covers the circle")
    }

    /// μ(Γᵏ) = Σ_{zᵏ=1} 𝓑(z), evaluated by counting which k-th roots of
    /// unity land on each point and inside each arc.
    #[must_use]
    pub fn iterate_mu(&self, k: u32) -> i64 {
        assert!(k >= 1, "iterate order must be positive");
        // Spectrum-free circle: 𝓑 is one constant and every root of
        // unity counts it.  The lone arc's seam at angle 0 is an
        // artifact of the representation, not a spectral point, so the
        // interior-only counting below must not run here (it would drop
        // the root at z = 1).
        if self.points.is_empty() {
            debug_assert_eq!(self.arcs.len(), 1);
            return self.arcs[0].value * i64::from(k);
        }
        let kf = f64::from(k);
        let margin = ROOT_MARGIN;
        let mut total = 0;

        // Points: e^{iθ} is a k-th root of unity iff kθ/2π is an integer.
        for p in &self.points {
            let x = kf * p.theta / TAU;
            if (x - x.round()).abs() <= kf * margin / TAU + 1e-12 {
                total += p.value;
            }
        }

        // Arcs: roots strictly inside (lo, hi) are the integers j with
        // lo < 2πj/k < hi; shrink by the margin so points never double
        // count.  The wrap arc's indices j ≥ k alias j − k and are
        // counted exactly once because hi ≤ lo + 2π.
        for a in &self.arcs {
            let j_lo = ((a.lo + margin) * kf / TAU).ceil() as i64;
            let j_hi = ((a.hi - margin) * kf / TAU).floor() as i64;
            if j_hi >= j_lo {
                total += a.value * (j_hi - j_lo + 1);
            }
        }
        total
    }

    /// ν(Γᵏ): total geometric multiplicity of eigenvalue 1 of the k-th
    /// iterate's endpoint, i.e. Σ ν over spectral points at k-th roots
    /// of unity.
    #[must_use]
    pub fn iterate_nu(&self, k: u32) -> i64 {
        assert!(k >= 1, "iterate order must be positive");
        let kf = f64::from(k);
        let mut total = 0;
        for p in &self.points {
            let x = kf * p.theta / TAU;
            if (x - x.round()).abs() <= kf * ROOT_MARGIN / TAU + 1e-12 {
                total += p.nu as i64;
            }
        }
        total
    }

    /// μ(Γᵏ) extended to all integers: negative iterates obey
    /// μ(Γ⁻ᵏ) = −μ(Γᵏ) − ν(Γᵏ), and the zeroth iterate is the constant
    /// path with μ = −n.
    #[must_use]
    pub fn iterate_mu_signed(&self, k: i64) -> i64 {
        use std::cmp::Ordering;
        match k.cmp(&0) {
            Ordering::Greater => self.iterate_mu(k as u32),
            Ordering::Equal => -(self.dim_half as i64),
            Ordering::Less => {
                let kk = (-k) as u32;
                -(self.iterate_mu(kk) + self.iterate_nu(kk))
            }
        }
    }

    /// The mean index μ̂ = (2π)⁻¹ ∫ 𝓑(e^{iθ}) dθ, the circle average of
    /// the arc values (points have measure zero).
    #[must_use]
    pub fn mean(&self) -> f64 {
        self.arcs
            .iter()
            .map(|a| a.value as f64 * (a.hi - a.lo))
            .sum::<f64>()
            / TAU
    }
}

// ─── tests ───────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Profile of a full positive turn: 𝓑(1) = 1 at the lone spectral
    /// point, 𝓑 = 2 on the rest of the circle.
    fn full_turn_profile() -> BottProfile {
        BottProfile::from_parts(
            1,
            1.0,
            vec![ProfilePoint {
                theta: 0.0,
                nu: 2,
                eta: 2,
                value: 1,
            }],
            vec![ProfileArc {
                lo: 0.0,
                hi: TAU,
                value: 2,
            }],
        )
    }

    #[test]
    fn value_lookup_distinguishes_point_and_arc() {
        let p = full_turn_profile();
        assert_eq!(p.value_at(0.0), 1);
        assert_eq!(p.value_at(TAU), 1);
        assert_eq!(p.value_at(1e-3), 2);
        assert_eq!(p.value_at(PI), 2);
        assert_eq!(p.value_at(-1e-3), 2);
    }

    /// Root counting reproduces the closed form μ(Γᵏ) = 2k − 1 of the
    /// full positive turn: the point contributes 1, the k − 1 interior
    /// roots contribute 2 each.
    #[test]
    fn iterate_counts_roots_of_unity() {
        let p = full_turn_profile();
        for k in 1..=64u32 {
            assert_eq!(p.iterate_mu(k), 2 * i64::from(k) - 1, "k = {k}");
            assert_eq!(p.iterate_nu(k), 2, "k = {k}");
        }
        // Large k stays exact: only the point at θ = 0 ever coincides.
        assert_eq!(p.iterate_mu(100_000), 199_999);
    }

    /// Signed iterates follow the inversion rule μ(Γ⁻ᵏ) = −μ(Γᵏ) − ν(Γᵏ).
    #[test]
    fn signed_iterates_invert() {
        let p = full_turn_profile();
        assert_eq!(p.iterate_mu_signed(3), 5);
        assert_eq!(p.iterate_mu_signed(-3), -7);
        assert_eq!(p.iterate_mu_signed(0), -1);
    }

    /// The mean is the arc average; for the full turn μ̂ = 2.
    #[test]
    fn mean_is_circle_average() {
        let p = full_turn_profile();
        assert!((p.mean() - 2.0).abs() < 1e-12);
    }

    /// A spectrum-free profile (endpoint entirely off the unit circle) is
    /// a single constant arc; every iterate counts it k times, including
    /// the root of unity sitting on the representation's seam at angle 0.
    #[test]
    fn spectrum_free_circle_counts_every_root() {
        let p = BottProfile::from_parts(
            2,
            1.0,
            Vec::new(),
            vec![ProfileArc {
                lo: 0.0,
                hi: TAU,
                value: 6,
            }],
        );
        for k in 1..=7 {
            assert_eq!(p.iterate_mu(k), 6 * i64::from(k), "k = {k}");
            assert_eq!(p.iterate_nu(k), 0, "k = {k}");
        }
        assert_eq!(p.value_at(0.0), 6);
        assert_eq!(p.iterate_mu_signed(-2), -12);
        assert!((p.mean() - 6.0).abs() < 1e-12);
    }

    /// A two-point profile splits the circle into two arcs; roots landing
    /// on either arc pick up that arc's value, including across the wrap.
    #[test]
    fn wrap_arc_counts_once() {
        let p = BottProfile::from_parts(
            1,
            1.0,
            vec![
                ProfilePoint {
                    theta: PI / 2.0,
                    nu: 1,
                    eta: 2,
                    value: 10,
                },
                ProfilePoint {
                    theta: PI,
                    nu: 1,
                    eta: 2,
                    value: 20,
                },
            ],
            vec![
                ProfileArc {
                    lo: PI / 2.0,
                    hi: PI,
                    value: 1,
                },
                ProfileArc {
                    lo: PI,
                    hi: PI / 2.0 + TAU,
                    value: -1,
                },
            ],
        );
        // k = 4: roots at 0, π/2, π, 3π/2 → arc(−1 at 0) + point 10 +
        // point 20 + arc(−1 at 3π/2).
        assert_eq!(p.iterate_mu(4), 28);
        // k = 2: roots at 0 and π → −1 + 20.
        assert_eq!(p.iterate_mu(2), 19);
        // k = 1: root at 0 lies on the wrap arc.
        assert_eq!(p.iterate_mu(1), -1);
        assert_eq!(p.iterate_nu(4), 2);
        assert_eq!(p.iterate_nu(3), 0);
        assert!((p.mean() - (0.25 - 0.75)).abs() < 1e-12);
        assert_eq!(p.value_at(0.0), -1);
        assert_eq!(p.value_at(PI / 2.0), 10);
        assert_eq!(p.value_at(0.75 * PI), 1);
    }
}

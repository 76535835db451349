//! Symplectic matrices on ℝ^{2n} in the interleaved Darboux layout.
//!
//! Coordinates are ordered (q₁, p₁, q₂, p₂, …, q_n, p_n), so the standard
//! structure matrix J is block-diagonal with n copies of
//!
//! ```text
//! J₂ = ⎡ 0  1⎤
//!      ⎣−1  0⎦
//! ```
//!
//! and the symplectic form is ω(u, v) = uᵀ J v, normalized by
//! ω(e_{qᵢ}, e_{pᵢ}) = +1. A matrix M is admitted only when
//! ‖MᵀJM − J‖_max ≤ tolerance and det M is within tolerance of +1; nothing
//! is ever silently re-projected onto the group.
//!
//! Two families of 2×2 blocks recur everywhere downstream:
//!
//! * `rotation_block(φ) = exp(φ J₂) = ⎡cos φ  sin φ; −sin φ  cos φ⎤`,
//! * `shear_block(s) = ⎡1 s; 0 1⎤ = exp(J₂ · diag(0, s))`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::CoreError;

/// Admission tolerance for the structure relation ‖MᵀJM − J‖_max and for
/// |det M − 1|.
pub const SYMPLECTIC_TOL: f64 = 1e-9;

/// The standard structure matrix J on ℝ^{2·dim_half}: block-diagonal copies
/// of J₂ = [[0, 1], [−1, 0]].
#[must_use]
pub fn standard_j(dim_half: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * dim_half, 2 * dim_half);
    for i in 0..dim_half {
        j[(2 * i, 2 * i + 1)] = 1.0;
        j[(2 * i + 1, 2 * i)] = -1.0;
    }
    j
}

/// Entrywise max-norm of MᵀJM − J; zero exactly on the symplectic group.
#[must_use]
pub fn symplectic_defect(m: &DMatrix<f64>) -> f64 {
    let j = standard_j(m.nrows() / 2);
    (m.transpose() * &j * m - &j).amax()
}

/// Matrix exponential by scaling-and-squaring with a truncated series.
///
/// Sized for the small (≤ 8×8) matrices this workspace handles; the series
/// length and scaling give max-norm accuracy near machine precision for
/// ‖M‖ up to a few hundred.
#[must_use]
pub fn matrix_exp(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "matrix_exp needs a square matrix");
    let norm = m.amax();
    // Scale so the series argument has max-norm ≤ 1/2.
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = m / f64::powi(2.0, squarings as i32);
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = DMatrix::<f64>::identity(n, n);
    for k in 1..=20 {
        term = (&term * &scaled) / (k as f64);
        sum += &term;
        if term.amax() < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Row-major wire format for [`SymplecticMatrix`]; deserialization
/// re-validates the structure relation.
#[derive(Serialize, Deserialize)]
struct RawMatrix {
    dim_half: usize,
    entries: Vec<Vec<f64>>,
}

/// A validated element of Sp(2n, ℝ) with the standard structure matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct SymplecticMatrix {
    dim_half: usize,
    entries: DMatrix<f64>,
}

impl SymplecticMatrix {
    /// Admit a matrix after checking ‖MᵀJM − J‖_max ≤ [`SYMPLECTIC_TOL`]
    /// and |det M − 1| ≤ [`SYMPLECTIC_TOL`].
    pub fn new(entries: DMatrix<f64>) -> Result<Self, CoreError> {
        let n = entries.nrows();
        if n != entries.ncols() || n == 0 || n % 2 != 0 {
            return Err(CoreError::DimensionMismatch {
                expected: 2 * n.div_ceil(2).max(1),
                got: n,
            });
        }
        // NaN must fail admission, so test the accepting direction.
        let defect = symplectic_defect(&entries);
        if defect.is_nan() || defect > SYMPLECTIC_TOL {
            return Err(CoreError::NotSymplectic {
                defect,
                tol: SYMPLECTIC_TOL,
            });
        }
        let det = entries.determinant();
        if det.is_nan() || (det - 1.0).abs() > SYMPLECTIC_TOL {
            return Err(CoreError::DeterminantDrift {
                det,
                tol: SYMPLECTIC_TOL,
            });
        }
        Ok(Self {
            dim_half: n / 2,
            entries,
        })
    }

    /// Wrap a matrix that is symplectic by construction (exact group
    /// operations on already-admitted elements). Debug builds still check.
    #[must_use]
    pub fn new_unchecked(entries: DMatrix<f64>) -> Self {
        debug_assert!(
            symplectic_defect(&entries) <= 1e-6,
            "new_unchecked received a matrix far from the group"
        );
        Self {
            dim_half: entries.nrows() / 2,
            entries,
        }
    }

    /// The identity in Sp(2·dim_half).
    #[must_use]
    pub fn identity(dim_half: usize) -> Self {
        Self {
            dim_half,
            entries: DMatrix::identity(2 * dim_half, 2 * dim_half),
        }
    }

    /// The 2×2 rotation exp(φ J₂) = [[cos φ, sin φ], [−sin φ, cos φ]].
    #[must_use]
    pub fn rotation_block(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            dim_half: 1,
            entries: DMatrix::from_row_slice(2, 2, &[c, s, -s, c]),
        }
    }

    /// The 2×2 upper shear [[1, s], [0, 1]] = exp(J₂ · diag(0, s)).
    #[must_use]
    pub fn shear_block(s: f64) -> Self {
        Self {
            dim_half: 1,
            entries: DMatrix::from_row_slice(2, 2, &[1.0, s, 0.0, 1.0]),
        }
    }

    /// Block-diagonal direct sum; symplectic because J itself is
    /// block-diagonal over the interleaved coordinate pairs.
    #[must_use]
    pub fn direct_sum(blocks: &[Self]) -> Self {
        let dim_half: usize = blocks.iter().map(|b| b.dim_half).sum();
        let n = 2 * dim_half;
        let mut entries = DMatrix::zeros(n, n);
        let mut offset = 0;
        for b in blocks {
            let d = 2 * b.dim_half;
            entries.view_mut((offset, offset), (d, d)).copy_from(&b.entries);
            offset += d;
        }
        Self { dim_half, entries }
    }

    /// Number of coordinate pairs n.
    #[must_use]
    pub fn dim_half(&self) -> usize {
        self.dim_half
    }

    /// Full matrix size 2n.
    #[must_use]
    pub fn dim(&self) -> usize {
        2 * self.dim_half
    }

    /// Immutable access to the raw entries.
    #[must_use]
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Consume and return the raw entries.
    #[must_use]
    pub fn into_inner(self) -> DMatrix<f64> {
        self.entries
    }

    /// Current structure defect ‖MᵀJM − J‖_max.
    #[must_use]
    pub fn defect(&self) -> f64 {
        symplectic_defect(&self.entries)
    }

    /// The group inverse −J Mᵀ J, exact up to rounding (no linear solve).
    #[must_use]
    pub fn inverse(&self) -> Self {
        let j = standard_j(self.dim_half);
        Self {
            dim_half: self.dim_half,
            entries: -(&j * self.entries.transpose() * &j),
        }
    }

    /// k-th power by repeated multiplication.
    #[must_use]
    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::identity(self.dim_half);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Apply to a vector.
    #[must_use]
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.entries * v
    }

    /// Distance to another element in the entrywise max-norm.
    #[must_use]
    pub fn distance(&self, other: &Self) -> f64 {
        (&self.entries - &other.entries).amax()
    }
}

impl std::ops::Mul for &SymplecticMatrix {
    type Output = SymplecticMatrix;

    fn mul(self, rhs: &SymplecticMatrix) -> SymplecticMatrix {
        assert_eq!(
            self.dim_half, rhs.dim_half,
            "cannot multiply symplectic matrices of different sizes"
        );
        SymplecticMatrix {
            dim_half: self.dim_half,
            entries: &self.entries * &rhs.entries,
        }
    }
}

impl TryFrom<RawMatrix> for SymplecticMatrix {
    type Error = CoreError;

    fn try_from(raw: RawMatrix) -> Result<Self, CoreError> {
        let n = 2 * raw.dim_half;
        if raw.entries.len() != n || raw.entries.iter().any(|row| row.len() != n) {
            return Err(CoreError::DimensionMismatch {
                expected: n,
                got: raw.entries.len(),
            });
        }
        let flat: Vec<f64> = raw.entries.into_iter().flatten().collect();
        Self::new(DMatrix::from_row_slice(n, n, &flat))
    }
}

impl From<SymplecticMatrix> for RawMatrix {
    fn from(m: SymplecticMatrix) -> RawMatrix {
        let n = m.dim();
        RawMatrix {
            dim_half: m.dim_half,
            entries: (0..n)
                .map(|r| (0..n).map(|c| m.entries[(r, c)]).collect())
                .collect(),
        }
    }
}

// ─────────────────────────────── tests ───────────────────────────────

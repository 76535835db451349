//! Normal form of the eigenvalue-one part of a symplectic matrix.
//!
//! The generalized eigenspace V of eigenvalue one is a symplectic subspace,
//! and the restriction P = M|_V decomposes symplectically into four kinds
//! of indecomposable blocks:
//!
//! * 2×2 identity blocks — counted by `b_id`;
//! * exp(J·Q₀) with Q₀ = p₁q₂ + … + p_{d−1}q_d on ℝ^{2d}, d ≥ 3 odd
//!   (a pair of size-d Jordan chains) — counted by `b_0`;
//! * exp(J·Q₊) and exp(J·Q₋) with Q± = ±(Q₀ + p_d²/2) on ℝ^{2d}, any d ≥ 1
//!   (a single size-2d Jordan chain each) — counted by `b_plus`/`b_minus`.
//!
//! The Jordan sizes follow from rank sequences of the nilpotent logarithm
//! L = log P. The ± split of each even chain size is recovered from the
//! signatures of the symmetric forms
//!
//! ```text
//! g_m(u, v) = uᵀ (L^{2m−1})ᵀ Ω v ,
//! ```
//!
//! where Ω is the restricted symplectic form. Rather than hard-coding how
//! each canonical block contributes to each sig(g_m), the module measures
//! those constants at runtime on the canonical blocks themselves
//! (`exp(J·Q₊(d))` for d up to the ambient bound) and solves the resulting
//! triangular system — the bookkeeping then cannot drift out of sync with
//! the conventions of the canonical forms.

use std::collections::HashMap;
use std::sync::OnceLock;

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::matrix::{standard_j, SymplecticMatrix};
use crate::spectrum::{circle_spectrum, SPECTRUM_TOL};

/// Desk-scale bound: the oracle refuses matrices beyond Sp(8).
pub const MAX_DIM_HALF: usize = 4;

/// Non-one eigenvalues must keep at least this distance from 1 for the
/// spectral filter separating V to be well conditioned.
const FILTER_MIN_GAP: f64 = 5e-4;

/// Block counts of the eigenvalue-one normal form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Eigen1Decomposition {
    /// Dimension of the generalized eigenspace of eigenvalue one.
    pub dim_v: usize,
    /// Number of 2×2 identity blocks.
    pub b_id: usize,
    /// Number of Q₀ blocks (odd Jordan-chain pairs, size ≥ 3).
    pub b_0: usize,
    /// Number of Q₊ blocks.
    pub b_plus: usize,
    /// Number of Q₋ blocks.
    pub b_minus: usize,
    /// Jordan chain sizes of the unipotent restriction, descending.
    pub jordan_sizes: Vec<usize>,
}

impl Eigen1Decomposition {
    /// The trivial decomposition (eigenvalue one absent).
    #[must_use]
    pub fn empty() -> Self {
        Self {
            dim_v: 0,
            b_id: 0,
            b_0: 0,
            b_plus: 0,
            b_minus: 0,
            jordan_sizes: Vec::new(),
        }
    }

    /// b₋ − b₊, the combination entering the degeneracy defect.
    #[must_use]
    pub fn b_defect(&self) -> i64 {
        self.b_minus as i64 - self.b_plus as i64
    }
}

// ─── canonical blocks and their measured signature constants ───

/// Hessian of Q₀ = Σ_{i<d} p_i q_{i+1} on ℝ^{2d}, interleaved coordinates.
pub(crate) fn q0_hessian(d: usize) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(2 * d, 2 * d);
    for i in 1..d {
        let p_i = 2 * (i - 1) + 1;
        let q_next = 2 * i;
        h[(p_i, q_next)] = 1.0;
        h[(q_next, p_i)] = 1.0;
    }
    h
}

/// Hessian of Q± = ±(Q₀ + p_d²/2) on ℝ^{2d}, interleaved coordinates.
pub(crate) fn q_pm_hessian(d: usize, sign: f64) -> DMatrix<f64> {
    let mut h = q0_hessian(d);
    h[(2 * d - 1, 2 * d - 1)] += 1.0;
    h * sign
}

/// Signature of the symmetric part of (L^{2m−1})ᵀ Ω, with eigenvalues below
/// `zero_tol` treated as zero.
fn form_signature(l: &DMatrix<f64>, omega: &DMatrix<f64>, m: usize, zero_tol: f64) -> i64 {
    let mut power = l.clone();
    for _ in 1..(2 * m - 1) {
        power = &power * l;
    }
    let raw = power.transpose() * omega;
    let sym = (&raw + raw.transpose()) * 0.5;
    let eigs = sym.symmetric_eigenvalues();
    let pos = eigs.iter().filter(|&&x| x > zero_tol).count() as i64;
    let neg = eigs.iter().filter(|&&x| x < -zero_tol).count() as i64;
    pos - neg
}

/// sig(g_m) measured on the canonical block exp(J·Q₊(d)): the calibration
/// constants c(d, m) of the triangular solve.
fn calibration() -> &'static HashMap<(usize, usize), i64> {
    static TABLE: OnceLock<HashMap<(usize, usize), i64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = HashMap::new();
        for d in 1..=MAX_DIM_HALF {
            let l = standard_j(d) * q_pm_hessian(d, 1.0);
            let omega = standard_j(d);
            for m in 1..=d {
                table.insert((d, m), form_signature(&l, &omega, m, 1e-9));
            }
        }
        table
    })
}

// ─── numerical building blocks ───

/// Rank from a descending singular-value list: entries above `floor` count,
/// and both sides of the cut must clear it by a factor of 10.
fn rank_with_gap(sv: &[f64], floor: f64) -> Result<usize, CoreError> {
    let rank = sv.iter().filter(|&&s| s > floor).count();
    if rank > 0 && sv[rank - 1] < 10.0 * floor {
        return Err(CoreError::RankAmbiguity {
            detail: format!(
                "smallest counted singular value {:.3e} too close to floor {floor:.3e}",
                sv[rank - 1]
            ),
        });
    }
    if rank < sv.len() && sv[rank] > floor / 10.0 {
        return Err(CoreError::RankAmbiguity {
            detail: format!(
                "largest discarded singular value {:.3e} too close to floor {floor:.3e}",
                sv[rank]
            ),
        });
    }
    Ok(rank)
}

/// Truncated exponential for a nilpotent argument.
fn nilpotent_exp(l: &DMatrix<f64>, terms: usize) -> DMatrix<f64> {
    let n = l.nrows();
    let mut sum = DMatrix::<f64>::identity(n, n);
    let mut term = DMatrix::<f64>::identity(n, n);
    for k in 1..=terms {
        term = (&term * l) / (k as f64);
        sum += &term;
    }
    sum
}

// ─── the oracle ───

/// Compute the block counts of the eigenvalue-one normal form of `m`.
///
/// Errors: [`CoreError::DimensionTooLarge`] beyond Sp(8);
/// [`CoreError::NotTotallyDegenerateBlock`] when the extracted restriction
/// carries an eigenvalue away from one or its block bookkeeping is
/// inconsistent; [`CoreError::LogFailure`] when log/exp fail to invert each
/// other on the restriction; [`CoreError::RankAmbiguity`] when a rank
/// decision lacks a clear singular-value gap.
pub fn eigen1_normal_form(m: &SymplecticMatrix) -> Result<Eigen1Decomposition, CoreError> {
    if m.dim_half() > MAX_DIM_HALF {
        return Err(CoreError::DimensionTooLarge {
            dim_half: m.dim_half(),
            max: MAX_DIM_HALF,
        });
    }
    let entries = m.entries();
    let n = entries.nrows();
    let scale = entries.clone().svd(false, false).singular_values[0];

    let spectrum = circle_spectrum(m, SPECTRUM_TOL)?;
    let eta1 = spectrum.point_near(0.0, 1e-9).map_or(0, |p| p.eta);
    if eta1 == 0 {
        return Ok(Eigen1Decomposition::empty());
    }

    // Split the computed eigenvalues into the one-cluster (the eta1 closest
    // to 1, which absorbs Jordan splay) and the rest.
    let mut eigs: Vec<Complex<f64>> = entries.complex_eigenvalues().iter().copied().collect();
    eigs.sort_by(|a, b| (a - 1.0).norm().total_cmp(&(b - 1.0).norm()));
    let one_cluster = &eigs[..eta1];
    let others = &eigs[eta1..];
    let taken_max = one_cluster
        .iter()
        .map(|z| (z - 1.0).norm())
        .fold(0.0, f64::max);
    if let Some(other_min) = others
        .iter()
        .map(|z| (z - 1.0).norm())
        .min_by(f64::total_cmp)
    {
        if other_min < FILTER_MIN_GAP || other_min < 3.0 * taken_max {
            return Err(CoreError::NotTotallyDegenerateBlock {
                detail: format!(
                    "another eigenvalue sits {other_min:.3e} from one; cannot separate the eigenvalue-one block"
                ),
            });
        }
    }

    // Orthonormal basis B of V = generalized eigenspace of 1, via the range
    // of the spectral filter p(M) = Π_{λ≠1-cluster} (M − λI)/(1 − λ).
    let basis: DMatrix<f64> = if eta1 == n {
        DMatrix::identity(n, n)
    } else {
        let mut filter: DMatrix<Complex<f64>> = DMatrix::identity(n, n);
        let mc: DMatrix<Complex<f64>> = entries.map(|x| Complex::new(x, 0.0));
        for &lambda in others {
            let mut factor = mc.clone();
            for i in 0..n {
                factor[(i, i)] -= lambda;
            }
            filter = filter * factor / (Complex::new(1.0, 0.0) - lambda);
        }
        let imag_max = filter.map(|z| z.im.abs()).max();
        let real_max = filter.map(|z| z.re.abs()).max();
        if imag_max > 1e-8 * (1.0 + real_max) {
            return Err(CoreError::NotTotallyDegenerateBlock {
                detail: format!("spectral filter has imaginary residue {imag_max:.3e}"),
            });
        }
        let p_real = filter.map(|z| z.re);
        let svd = p_real.svd(true, false);
        let sv = &svd.singular_values;
        if sv[eta1 - 1] < 1e-6 * sv[0] || (eta1 < n && sv[eta1] > 1e-3 * sv[eta1 - 1]) {
            return Err(CoreError::RankAmbiguity {
                detail: format!(
                    "spectral filter rank gap unclear: σ_{} = {:.3e}, σ_{} = {:.3e}",
                    eta1 - 1,
                    sv[eta1 - 1],
                    eta1,
                    if eta1 < n { sv[eta1] } else { 0.0 }
                ),
            });
        }
        let u = svd.u.expect("svd with u requested");
        u.columns(0, eta1).into_owned()
    };

    // Restriction, invariance, and total degeneracy.
    let m_res = basis.transpose() * entries * &basis;
    let invariance = (entries * &basis - &basis * &m_res).amax();
    if invariance > 1e-6 * scale {
        return Err(CoreError::NotTotallyDegenerateBlock {
            detail: format!("extracted subspace is not invariant (residual {invariance:.3e})"),
        });
    }
    // Computed eigenvalues of the restriction splay up to ~ε_mach^{1/8}
    // around 1 when chains are long; anything beyond that is a real leak.
    let res_eigs = m_res.complex_eigenvalues();
    if let Some(bad) = res_eigs.iter().find(|z| (*z - 1.0).norm() > 5e-2) {
        return Err(CoreError::NotTotallyDegenerateBlock {
            detail: format!("restriction carries eigenvalue {bad} away from one"),
        });
    }

    // Restricted symplectic form: V must be a symplectic subspace.
    let omega_res = basis.transpose() * standard_j(m.dim_half()) * &basis;
    let omega_sv = omega_res.clone().svd(false, false).singular_values;
    if omega_sv[omega_sv.len() - 1] < 1e-6 {
        return Err(CoreError::NotTotallyDegenerateBlock {
            detail: "restricted symplectic form is degenerate".to_string(),
        });
    }

    // Nilpotent logarithm of the unipotent restriction.
    let nilpotent = &m_res - DMatrix::<f64>::identity(eta1, eta1);
    let mut power = nilpotent.clone();
    for _ in 1..eta1 {
        power = &power * &nilpotent;
    }
    let nil_scale = (1.0 + nilpotent.amax()).powi(eta1 as i32);
    if power.amax() > 1e-8 * nil_scale {
        return Err(CoreError::NotTotallyDegenerateBlock {
            detail: format!(
                "restriction is not unipotent: ‖Nᵏ‖ = {:.3e} at k = {eta1}",
                power.amax()
            ),
        });
    }
    let mut log = DMatrix::<f64>::zeros(eta1, eta1);
    let mut term = DMatrix::<f64>::identity(eta1, eta1);
    for k in 1..=eta1 {
        term = &term * &nilpotent;
        let signed = if k % 2 == 1 { 1.0 } else { -1.0 };
        log += &term * (signed / k as f64);
    }
    let exp_back = nilpotent_exp(&log, eta1 + 2);
    let log_residual = (&exp_back - &m_res).amax();
    if log_residual > 1e-8 * (1.0 + scale) {
        return Err(CoreError::LogFailure {
            detail: format!("exp(log P) misses P by {log_residual:.3e}"),
        });
    }

    // Jordan chain sizes from the rank sequence of L.
    let log_norm = log.amax();
    let mut ranks = vec![eta1];
    let mut lp = DMatrix::<f64>::identity(eta1, eta1);
    for j in 1..=eta1 {
        lp = &lp * &log;
        let sv: Vec<f64> = lp.clone().svd(false, false).singular_values.iter().copied().collect();
        let floor = 1e-10 * (1.0 + log_norm.powi(j as i32));
        let r = rank_with_gap(&sv, floor)?;
        ranks.push(r);
        if r == 0 {
            break;
        }
    }
    while ranks.len() < eta1 + 2 {
        ranks.push(0);
    }
    let blocks_of_size = |d: usize| -> i64 {
        // n_d = r_{d−1} − 2 r_d + r_{d+1}
        ranks[d - 1] as i64 - 2 * ranks[d] as i64 + ranks[d + 1] as i64
    };
    let mut sizes: Vec<(usize, usize)> = Vec::new(); // (size, count)
    let mut total = 0usize;
    for d in 1..=eta1 {
        let c = blocks_of_size(d);
        if c < 0 {
            return Err(CoreError::NotTotallyDegenerateBlock {
                detail: format!("negative Jordan count {c} at size {d}"),
            });
        }
        if c > 0 {
            sizes.push((d, c as usize));
            total += d * c as usize;
        }
    }
    if total != eta1 {
        return Err(CoreError::NotTotallyDegenerateBlock {
            detail: format!("Jordan sizes cover {total} of {eta1} dimensions"),
        });
    }

    // Identity blocks and odd chain pairs.
    let count_of = |d: usize| sizes.iter().find(|&&(s, _)| s == d).map_or(0, |&(_, c)| c);
    let n1 = count_of(1);
    if n1 % 2 != 0 {
        return Err(CoreError::NotTotallyDegenerateBlock {
            detail: format!("odd number {n1} of size-1 Jordan chains"),
        });
    }
    let b_id = n1 / 2;
    let mut b_0 = 0usize;
    for &(d, c) in &sizes {
        if d >= 3 && d % 2 == 1 {
            if c % 2 != 0 {
                return Err(CoreError::NotTotallyDegenerateBlock {
                    detail: format!("odd number {c} of size-{d} Jordan chains"),
                });
            }
            b_0 += c / 2;
        }
    }

    // ± split of even chain sizes by measured signatures.
    let table = calibration();
    let k_max = sizes
        .iter()
        .filter(|&&(d, _)| d % 2 == 0)
        .map(|&(d, _)| d / 2)
        .max()
        .unwrap_or(0);
    let mut delta: HashMap<usize, i64> = HashMap::new(); // k -> b₊ᵏ − b₋ᵏ
    let mut b_plus = 0usize;
    let mut b_minus = 0usize;
    for k in (1..=k_max).rev() {
        let zero_tol = 1e-9 * (1.0 + log_norm.powi((2 * k - 1) as i32));
        let sig = form_signature(&log, &omega_res, k, zero_tol);
        let higher: i64 = delta
            .iter()
            .filter(|&(&kp, _)| kp > k)
            .map(|(&kp, &dl)| table.get(&(kp, k)).copied().unwrap_or(0) * dl)
            .sum();
        let diag = *table.get(&(k, k)).expect("calibration covers k ≤ 4");
        assert!(diag.abs() == 1, "canonical diagonal signature must be ±1");
        let residual = sig - higher;
        if residual % diag != 0 {
            return Err(CoreError::NotTotallyDegenerateBlock {
                detail: format!("non-integral signature split at chain size {}", 2 * k),
            });
        }
        let d_k = residual / diag;
        let n_2k = count_of(2 * k) as i64;
        if (n_2k + d_k) % 2 != 0 || d_k.abs() > n_2k {
            return Err(CoreError::NotTotallyDegenerateBlock {
                detail: format!(
                    "signature {d_k} incompatible with {n_2k} chains of size {}",
                    2 * k
                ),
            });
        }
        b_plus += ((n_2k + d_k) / 2) as usize;
        b_minus += ((n_2k - d_k) / 2) as usize;
        delta.insert(k, d_k);
    }

    let mut jordan_sizes: Vec<usize> = sizes
        .iter()
        .flat_map(|&(d, c)| std::iter::repeat_n(d, c))
        .collect();
    jordan_sizes.sort_unstable_by(|a, b| b.cmp(a));

    Ok(Eigen1Decomposition {
        dim_v: eta1,
        b_id,
        b_0,
        b_plus,
        b_minus,
        jordan_sizes,
    })
}

// ─────────────────────────────── tests ───────────────────────────────

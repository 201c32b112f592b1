//! Small dense linear-algebra helpers shared by the estimators.
//!
//! Every solve goes through an SVD so rank-deficient snapshot matrices (a
//! single trajectory of a system with repeated eigenvalues, for instance)
//! fall back to the minimum-norm least-squares solution instead of failing.

use nalgebra::{DMatrix, DVector, SVD};

/// Relative cutoff below which singular values are treated as zero.
pub const RCOND: f64 = 1e-12;

/// Result of a least-squares solve.
pub(crate) struct LstsqSolution {
    pub x: DMatrix<f64>,
    pub rank: usize,
}

/// Minimum-norm solution of `a * x ≈ b`.
pub(crate) fn lstsq(a: DMatrix<f64>, b: &DMatrix<f64>) -> LstsqSolution {
    let cols = a.ncols();
    if a.nrows() == 0 || cols == 0 {
        return LstsqSolution {
            x: DMatrix::zeros(cols, b.ncols()),
            rank: 0,
        };
    }
    let svd = SVD::new(a, true, true);
    let smax = svd.singular_values.max();
    let cutoff = RCOND * smax;
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    if rank == 0 {
        return LstsqSolution {
            x: DMatrix::zeros(cols, b.ncols()),
            rank: 0,
        };
    }
    let x = svd
        .solve(b, cutoff)
        .expect("u and v were requested from the decomposition");
    LstsqSolution { x, rank }
}

/// Fits `A` in `Yp ≈ A Y` minimizing `Σ_k q_k ‖yp_k − A y_k‖²`.
///
/// Column `k` of both matrices is scaled by `√q_k` and the transposed
/// system `Yᵀ Aᵀ = Ypᵀ` is solved by SVD.
pub(crate) fn weighted_operator_fit(
    y: &DMatrix<f64>,
    yp: &DMatrix<f64>,
    q: &[f64],
) -> LstsqSolution {
    debug_assert_eq!(y.ncols(), q.len());
    let mut design = y.transpose();
    let mut rhs = yp.transpose();
    for (k, &qk) in q.iter().enumerate() {
        let root = qk.sqrt();
        design.row_mut(k).scale_mut(root);
        rhs.row_mut(k).scale_mut(root);
    }
    let sol = lstsq(design, &rhs);
    LstsqSolution {
        x: sol.x.transpose(),
        rank: sol.rank,
    }
}

/// Tikhonov-regularized weighted fit:
/// `A = Xp Q Xᵀ (X Q Xᵀ + γ² I)⁻¹`, solved as the stacked least-squares
/// problem `[√Q Xᵀ; γ I] Aᵀ ≈ [√Q Xpᵀ; 0]`.
pub(crate) fn ridge_operator_fit(
    x: &DMatrix<f64>,
    xp: &DMatrix<f64>,
    q: &[f64],
    gamma_sq: f64,
) -> LstsqSolution {
    if gamma_sq == 0.0 {
        return weighted_operator_fit(x, xp, q);
    }
    let (c, n) = x.shape();
    let mut design = DMatrix::zeros(n + c, c);
    let mut rhs = DMatrix::zeros(n + c, xp.nrows());
    for (k, &qk) in q.iter().enumerate() {
        let root = qk.sqrt();
        design.row_mut(k).copy_from(&(x.column(k).transpose() * root));
        rhs.row_mut(k).copy_from(&(xp.column(k).transpose() * root));
    }
    let g = gamma_sq.sqrt();
    for i in 0..c {
        design[(n + i, i)] = g;
    }
    let sol = lstsq(design, &rhs);
    LstsqSolution {
        x: sol.x.transpose(),
        rank: sol.rank,
    }
}

/// Weighted fit of a single row `a` in `yp_row ≈ aᵀ Y`.
pub(crate) fn weighted_row_fit(y: &DMatrix<f64>, target: &DVector<f64>, q: &[f64]) -> LstsqSolution {
    let mut design = y.transpose();
    let mut rhs = DMatrix::from_column_slice(target.len(), 1, target.as_slice());
    for (k, &qk) in q.iter().enumerate() {
        let root = qk.sqrt();
        design.row_mut(k).scale_mut(root);
        rhs[(k, 0)] *= root;
    }
    lstsq(design, &rhs)
}

/// Moore–Penrose pseudo-inverse.
pub fn pinv(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, c) = a.shape();
    if r == 0 || c == 0 {
        return DMatrix::zeros(c, r);
    }
    lstsq(a.clone(), &DMatrix::identity(r, r)).x
}

/// Thin SVD with singular values in descending order.
pub(crate) struct ThinSvd {
    pub u: DMatrix<f64>,
    pub sigma: DVector<f64>,
    pub v_t: DMatrix<f64>,
}

pub(crate) fn thin_svd(a: &DMatrix<f64>) -> ThinSvd {
    let svd = SVD::new(a.clone(), true, true);
    ThinSvd {
        u: svd.u.expect("requested"),
        sigma: svd.singular_values,
        v_t: svd.v_t.expect("requested"),
    }
}

/// Numerical rank with the crate-wide relative cutoff.
pub(crate) fn numerical_rank(sigma: &DVector<f64>) -> usize {
    let smax = sigma.iter().cloned().fold(0.0_f64, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sigma.iter().filter(|&&s| s > RCOND * smax).count()
}

pub(crate) fn all_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}

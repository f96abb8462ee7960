//! Small dense linear-algebra helpers shared across modules.
//!
//! Everything here operates on `nalgebra` dynamic matrices at desk scale
//! (dimensions well below 100), so SVD-based routines are used throughout
//! for their robustness rather than their speed.

use nalgebra::{DMatrix, DVector};

/// Relative singular-value cutoff used by default for rank decisions.
pub const DEFAULT_RANK_REL_TOL: f64 = 1e-8;

/// Numerical rank: the number of singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(mat: &DMatrix<f64>, rel_tol: f64) -> usize {
    if mat.nrows() == 0 || mat.ncols() == 0 {
        return 0;
    }
    let svals = mat.clone().singular_values();
    let smax = svals.max();
    if smax <= 0.0 {
        return 0;
    }
    svals.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Orthonormal basis of the column span of `mat`, as matrix columns.
///
/// Columns with singular value at or below `rel_tol * sigma_max` are treated
/// as numerically zero and dropped.
pub fn orthonormal_column_span(mat: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let n = mat.nrows();
    if n == 0 || mat.ncols() == 0 {
        return DMatrix::zeros(n, 0);
    }
    let svd = mat.clone().svd(true, false);
    let smax = svd.singular_values.max();
    if smax <= 0.0 {
        return DMatrix::zeros(n, 0);
    }
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > rel_tol * smax)
        .count();
    let u = svd.u.expect("SVD with u requested");
    u.columns(0, rank).into_owned()
}

/// Stacks vectors as the columns of a matrix. Empty input gives an `n x 0`
/// matrix, which is why the ambient dimension must be passed explicitly.
pub fn columns_from_vectors(dim: usize, vectors: &[DVector<f64>]) -> DMatrix<f64> {
    let mut mat = DMatrix::zeros(dim, vectors.len());
    for (j, v) in vectors.iter().enumerate() {
        mat.set_column(j, v);
    }
    mat
}

/// The columns of a matrix as owned vectors.
pub fn vectors_from_columns(mat: &DMatrix<f64>) -> Vec<DVector<f64>> {
    (0..mat.ncols())
        .map(|j| mat.column(j).into_owned())
        .collect()
}

/// Largest singular value (spectral norm).
pub fn spectral_norm(mat: &DMatrix<f64>) -> f64 {
    if mat.nrows() == 0 || mat.ncols() == 0 {
        return 0.0;
    }
    mat.clone().singular_values().max()
}

/// `||residual of projecting v onto the column span of basis||`.
///
/// `basis` must have orthonormal columns.
pub fn distance_to_span(basis: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    if basis.ncols() == 0 {
        return v.norm();
    }
    let coeffs = basis.transpose() * v;
    (v - basis * coeffs).norm()
}

/// Least-squares solution of `a x = b` via SVD with a relative cutoff.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>, rel_tol: f64) -> DVector<f64> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = if smax > 0.0 { rel_tol * smax } else { rel_tol };
    svd.solve(b, eps)
        .expect("SVD solve with u and v_t computed")
}

/// Signature `(n_plus, n_minus)` of a symmetric matrix: the counts of
/// eigenvalues above and below `rel_tol * max|eigenvalue|`.
pub fn symmetric_signature(gram: &DMatrix<f64>, rel_tol: f64) -> (usize, usize) {
    let sym = (gram + gram.transpose()) * 0.5;
    let eigs = sym.symmetric_eigenvalues();
    let scale = eigs.iter().fold(0.0_f64, |m, &e| m.max(e.abs()));
    if scale == 0.0 {
        return (0, 0);
    }
    let cut = rel_tol * scale;
    let pos = eigs.iter().filter(|&&e| e > cut).count();
    let neg = eigs.iter().filter(|&&e| e < -cut).count();
    (pos, neg)
}

/// Central-difference Jacobian of `f` at `x` with uniform step `h`.
pub fn central_jacobian<F>(f: F, x: &DVector<f64>, h: f64, out_dim: usize) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let n = x.len();
    let mut jac = DMatrix::zeros(out_dim, n);
    let mut xp = x.clone();
    let mut xm = x.clone();
    for j in 0..n {
        let xj = x[j];
        xp[j] = xj + h;
        xm[j] = xj - h;
        let diff = (f(&xp) - f(&xm)) / (2.0 * h);
        jac.set_column(j, &diff);
        xp[j] = xj;
        xm[j] = xj;
    }
    jac
}

/// Fallible version of [`central_jacobian`]: any evaluation error aborts.
pub fn try_central_jacobian<F, E>(
    f: F,
    x: &DVector<f64>,
    h: f64,
    out_dim: usize,
) -> Result<DMatrix<f64>, E>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>, E>,
{
    let n = x.len();
    let mut jac = DMatrix::zeros(out_dim, n);
    let mut xp = x.clone();
    let mut xm = x.clone();
    for j in 0..n {
        let xj = x[j];
        xp[j] = xj + h;
        xm[j] = xj - h;
        let diff = (f(&xp)? - f(&xm)?) / (2.0 * h);
        jac.set_column(j, &diff);
        xp[j] = xj;
        xm[j] = xj;
    }
    Ok(jac)
}

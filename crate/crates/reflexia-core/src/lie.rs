//! Finite-dimensional matrix Lie algebras: structure constants, brackets,
//! matrix exponential/logarithm, adjoint actions, Killing form, and the
//! basis-independent fingerprint used for isomorphism screening.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::linalg;

/// Default tolerance for the algebraic identity checks.
pub const DEFAULT_ALGEBRA_TOL: f64 = 1e-9;

/// Radius of the principal-logarithm chart: `mat_log` rejects inputs with
/// `||g - I||_2` at or beyond this value, which keeps every spectrum used in
/// the toolkit strictly inside the right half plane (single branch).
pub const DEFAULT_LOG_RADIUS: f64 = 0.9;

/// A finite-dimensional real Lie algebra given by structure constants in a
/// fixed basis, optionally realized by a faithful set of basis matrices.
///
/// `c[i][j][k]` is the `k`-th coordinate of `[e_i, e_j]`.
#[derive(Debug, Clone)]
pub struct LieAlgebraSpec {
    dim: usize,
    constants: Vec<f64>,
    matrix_basis: Option<Vec<DMatrix<f64>>>,
    labels: Option<Vec<String>>,
}

/// On-disk form of a [`LieAlgebraSpec`] (JSON, row-major matrices).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlgebraFile {
    pub dim: usize,
    pub structure_constants: Vec<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix_basis: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl LieAlgebraSpec {
    pub fn new(
        dim: usize,
        structure_constants: Vec<Vec<Vec<f64>>>,
        matrix_basis: Option<Vec<DMatrix<f64>>>,
        labels: Option<Vec<String>>,
    ) -> Result<Self, CoreError> {
        if dim == 0 {
            return Err(CoreError::InvalidInput(
                "algebra dimension must be positive".into(),
            ));
        }
        if structure_constants.len() != dim
            || structure_constants
                .iter()
                .any(|p| p.len() != dim || p.iter().any(|r| r.len() != dim))
        {
            return Err(CoreError::InvalidInput(format!(
                "structure constants must form a dense {dim}x{dim}x{dim} array"
            )));
        }
        let mut constants = vec![0.0; dim * dim * dim];
        for (i, plane) in structure_constants.iter().enumerate() {
            for (j, row) in plane.iter().enumerate() {
                for (k, &v) in row.iter().enumerate() {
                    if !v.is_finite() {
                        return Err(CoreError::InvalidInput(format!(
                            "structure constant c[{i}][{j}][{k}] is not finite"
                        )));
                    }
                    constants[(i * dim + j) * dim + k] = v;
                }
            }
        }
        if let Some(basis) = &matrix_basis {
            if basis.len() != dim {
                return Err(CoreError::dim(dim, basis.len()));
            }
            let m = basis[0].nrows();
            for b in basis {
                if b.nrows() != m || b.ncols() != m {
                    return Err(CoreError::InvalidInput(
                        "matrix basis elements must be square of a common size".into(),
                    ));
                }
            }
        }
        if let Some(l) = &labels {
            if l.len() != dim {
                return Err(CoreError::dim(dim, l.len()));
            }
        }
        Ok(LieAlgebraSpec {
            dim,
            constants,
            matrix_basis,
            labels,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn matrix_basis(&self) -> Option<&[DMatrix<f64>]> {
        self.matrix_basis.as_deref()
    }

    /// Size of the matrices realizing the algebra, when a basis is present.
    pub fn matrix_size(&self) -> Option<usize> {
        self.matrix_basis.as_ref().map(|b| b[0].nrows())
    }

    #[inline]
    pub fn c(&self, i: usize, j: usize, k: usize) -> f64 {
        self.constants[(i * self.dim + j) * self.dim + k]
    }

    /// `[x, y]` through the structure constants.
    pub fn bracket(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<DVector<f64>, CoreError> {
        let n = self.dim;
        if x.len() != n {
            return Err(CoreError::dim(n, x.len()));
        }
        if y.len() != n {
            return Err(CoreError::dim(n, y.len()));
        }
        let mut out = DVector::zeros(n);
        for i in 0..n {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for j in 0..n {
                let yj = y[j];
                if yj == 0.0 {
                    continue;
                }
                let w = xi * yj;
                for k in 0..n {
                    out[k] += w * self.c(i, j, k);
                }
            }
        }
        Ok(out)
    }

    /// Matrix of `ad(x): y -> [x, y]` in the algebra basis.
    pub fn ad(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, CoreError> {
        let n = self.dim;
        if x.len() != n {
            return Err(CoreError::dim(n, x.len()));
        }
        let mut out = DMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..n {
                let xi = x[i];
                if xi == 0.0 {
                    continue;
                }
                for k in 0..n {
                    out[(k, j)] += xi * self.c(i, j, k);
                }
            }
        }
        Ok(out)
    }

    /// Killing form `tr(ad(x) ad(y))`.
    pub fn killing_form(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64, CoreError> {
        let ax = self.ad(x)?;
        let ay = self.ad(y)?;
        Ok((ax * ay).trace())
    }

    /// Gram matrix of the Killing form in the algebra basis.
    pub fn killing_matrix(&self) -> DMatrix<f64> {
        let n = self.dim;
        let ads: Vec<DMatrix<f64>> = (0..n)
            .map(|i| {
                let e = DVector::from_fn(n, |r, _| if r == i { 1.0 } else { 0.0 });
                self.ad(&e).expect("basis vector has the right length")
            })
            .collect();
        let mut gram = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = (&ads[i] * &ads[j]).trace();
                gram[(i, j)] = v;
                gram[(j, i)] = v;
            }
        }
        gram
    }

    /// `sum_i x_i B_i` for the matrix basis `B`.
    pub fn vector_to_matrix(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, CoreError> {
        let basis = self
            .matrix_basis
            .as_ref()
            .ok_or_else(|| CoreError::InvalidInput("no matrix basis available".into()))?;
        if x.len() != self.dim {
            return Err(CoreError::dim(self.dim, x.len()));
        }
        let m = basis[0].nrows();
        let mut out = DMatrix::zeros(m, m);
        for (xi, b) in x.iter().zip(basis) {
            if *xi != 0.0 {
                out += b * *xi;
            }
        }
        Ok(out)
    }

    /// Expands `mat` in the matrix basis by least squares, returning the
    /// coordinates and the expansion residual `||mat - sum_i x_i B_i||`.
    pub fn matrix_to_vector(&self, mat: &DMatrix<f64>) -> Result<(DVector<f64>, f64), CoreError> {
        let basis = self
            .matrix_basis
            .as_ref()
            .ok_or_else(|| CoreError::InvalidInput("no matrix basis available".into()))?;
        let m = basis[0].nrows();
        if mat.nrows() != m || mat.ncols() != m {
            return Err(CoreError::dim(m, mat.nrows()));
        }
        let mut phi = DMatrix::zeros(m * m, self.dim);
        for (j, b) in basis.iter().enumerate() {
            for (idx, v) in b.iter().enumerate() {
                phi[(idx, j)] = *v;
            }
        }
        let rhs = DVector::from_column_slice(mat.as_slice());
        let coords = linalg::lstsq(&phi, &rhs, 1e-13);
        let residual = (&phi * &coords - rhs).norm();
        Ok((coords, residual))
    }

    /// Matrix of `Ad(g)` in the algebra basis: each `g B_i g^-1` re-expanded
    /// over the basis. Fails with `NotAdInvariant` when conjugation leaves
    /// the span by more than `tol` (relative to the matrix norm).
    pub fn adjoint(&self, g: &GroupElement, tol: f64) -> Result<DMatrix<f64>, CoreError> {
        let basis = self
            .matrix_basis
            .as_ref()
            .ok_or_else(|| CoreError::InvalidInput("no matrix basis available".into()))?;
        let g_inv = g
            .matrix()
            .clone()
            .try_inverse()
            .ok_or_else(|| CoreError::InvalidInput("group element is singular".into()))?;
        let mut ad_g = DMatrix::zeros(self.dim, self.dim);
        for (i, b) in basis.iter().enumerate() {
            let conj = g.matrix() * b * &g_inv;
            let scale = conj.norm().max(1.0);
            let (coords, residual) = self.matrix_to_vector(&conj)?;
            if residual > tol * scale {
                return Err(CoreError::NotAdInvariant {
                    residual: residual / scale,
                });
            }
            ad_g.set_column(i, &coords);
        }
        Ok(ad_g)
    }

    /// Residual diagnostics for the algebra invariants.
    pub fn validate(&self, tol: f64) -> ValidationReport {
        let n = self.dim;
        let mut antisym: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    antisym = antisym.max((self.c(i, j, k) + self.c(j, i, k)).abs());
                }
            }
        }
        let basis_vec =
            |i: usize| DVector::<f64>::from_fn(n, |r, _| if r == i { 1.0 } else { 0.0 });
        let mut jacobi: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let (ei, ej, ek) = (basis_vec(i), basis_vec(j), basis_vec(k));
                    let term = |a: &DVector<f64>, b: &DVector<f64>, c: &DVector<f64>| {
                        let inner = self.bracket(b, c).expect("dims agree");
                        self.bracket(a, &inner).expect("dims agree")
                    };
                    let cycl = term(&ei, &ej, &ek) + term(&ej, &ek, &ei) + term(&ek, &ei, &ej);
                    jacobi = jacobi.max(cycl.amax());
                }
            }
        }
        let (consistency, independent) = match &self.matrix_basis {
            None => (None, None),
            Some(basis) => {
                let mut worst: f64 = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        let comm = &basis[i] * &basis[j] - &basis[j] * &basis[i];
                        let mut expected = DMatrix::zeros(basis[0].nrows(), basis[0].ncols());
                        for (k, b) in basis.iter().enumerate() {
                            let c = self.c(i, j, k);
                            if c != 0.0 {
                                expected += b * c;
                            }
                        }
                        worst = worst.max((comm - expected).norm());
                    }
                }
                let m = basis[0].nrows();
                let mut stacked = DMatrix::zeros(m * m, n);
                for (j, b) in basis.iter().enumerate() {
                    for (idx, v) in b.iter().enumerate() {
                        stacked[(idx, j)] = *v;
                    }
                }
                let independent = linalg::numerical_rank(&stacked, 1e-10) == n;
                (Some(worst), Some(independent))
            }
        };
        let passed = antisym <= tol
            && jacobi <= tol
            && consistency.is_none_or(|r| r <= tol)
            && independent.is_none_or(|b| b);
        ValidationReport {
            antisymmetry_residual: antisym,
            jacobi_residual: jacobi,
            matrix_consistency_residual: consistency,
            matrix_basis_independent: independent,
            tolerance: tol,
            passed,
        }
    }

    /// Columns are all pairwise brackets `[a_i, b_j]`.
    pub fn pairwise_brackets(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut cols = Vec::with_capacity(a.ncols() * b.ncols());
        for i in 0..a.ncols() {
            for j in 0..b.ncols() {
                let ai = a.column(i).into_owned();
                let bj = b.column(j).into_owned();
                cols.push(self.bracket(&ai, &bj).expect("dims agree"));
            }
        }
        linalg::columns_from_vectors(self.dim, &cols)
    }

    /// Basis-independent invariants used as a necessary isomorphism test.
    pub fn fingerprint(&self, rank_tol: f64) -> Fingerprint {
        let n = self.dim;
        let full = DMatrix::<f64>::identity(n, n);

        let mut derived = vec![n];
        let mut current = full.clone();
        loop {
            let brackets = self.pairwise_brackets(&current, &current);
            let next = linalg::orthonormal_column_span(&brackets, rank_tol);
            let d = next.ncols();
            derived.push(d);
            if d == *derived[derived.len() - 2..].first().unwrap() || d == 0 {
                break;
            }
            current = next;
        }

        let mut lower_central = vec![n];
        let mut current = full.clone();
        loop {
            let brackets = self.pairwise_brackets(&full, &current);
            let next = linalg::orthonormal_column_span(&brackets, rank_tol);
            let d = next.ncols();
            lower_central.push(d);
            if d == *lower_central[lower_central.len() - 2..].first().unwrap() || d == 0 {
                break;
            }
            current = next;
        }

        // center = kernel of x -> ([x, e_j])_j
        let mut ad_stack = DMatrix::zeros(n * n, n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    ad_stack[(j * n + k, i)] = self.c(i, j, k);
                }
            }
        }
        let center_dim = n - linalg::numerical_rank(&ad_stack, rank_tol);

        let killing_signature = linalg::symmetric_signature(&self.killing_matrix(), rank_tol);

        Fingerprint {
            dim: n,
            derived_series: derived,
            lower_central_series: lower_central,
            center_dim,
            killing_signature,
        }
    }

    pub fn to_file(&self) -> AlgebraFile {
        let n = self.dim;
        let mut cs = vec![vec![vec![0.0; n]; n]; n];
        for (i, plane) in cs.iter_mut().enumerate() {
            for (j, row) in plane.iter_mut().enumerate() {
                for (k, value) in row.iter_mut().enumerate() {
                    *value = self.c(i, j, k);
                }
            }
        }
        AlgebraFile {
            dim: n,
            structure_constants: cs,
            matrix_basis: self
                .matrix_basis
                .as_ref()
                .map(|basis| basis.iter().map(matrix_to_rows).collect()),
            labels: self.labels.clone(),
        }
    }

    pub fn from_file(file: AlgebraFile) -> Result<Self, CoreError> {
        let basis = match file.matrix_basis {
            None => None,
            Some(rows) => Some(
                rows.into_iter()
                    .map(|m| matrix_from_rows(&m))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
        };
        LieAlgebraSpec::new(file.dim, file.structure_constants, basis, file.labels)
    }

    pub fn from_json_str(text: &str) -> Result<Self, CoreError> {
        let file: AlgebraFile = serde_json::from_str(text)
            .map_err(|e| CoreError::InvalidInput(format!("algebra file: {e}")))?;
        Self::from_file(file)
    }
}

/// Row-major nested representation of a matrix, the JSON wire form.
pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Parses a row-major nested array into a matrix.
pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>, CoreError> {
    if rows.is_empty() {
        return Err(CoreError::InvalidInput("empty matrix".into()));
    }
    let ncols = rows[0].len();
    if ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(CoreError::InvalidInput("ragged matrix rows".into()));
    }
    let mut m = DMatrix::zeros(rows.len(), ncols);
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(CoreError::InvalidInput("matrix entry is not finite".into()));
            }
            m[(i, j)] = v;
        }
    }
    Ok(m)
}

/// Validation residuals for a [`LieAlgebraSpec`].
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub antisymmetry_residual: f64,
    pub jacobi_residual: f64,
    pub matrix_consistency_residual: Option<f64>,
    pub matrix_basis_independent: Option<bool>,
    pub tolerance: f64,
    pub passed: bool,
}

/// Tuple of basis-independent Lie-algebra invariants.
///
/// Equality of fingerprints is necessary but not sufficient for the two
/// algebras to be isomorphic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub dim: usize,
    pub derived_series: Vec<usize>,
    pub lower_central_series: Vec<usize>,
    pub center_dim: usize,
    pub killing_signature: (usize, usize),
}

/// An invertible matrix regarded as a group element near the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    matrix: DMatrix<f64>,
}

impl GroupElement {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self, CoreError> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(CoreError::InvalidInput(
                "group element must be square".into(),
            ));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::InvalidInput(
                "group element has non-finite entries".into(),
            ));
        }
        let svals = matrix.clone().singular_values();
        if svals.min() <= 1e-12 * svals.max() {
            return Err(CoreError::InvalidInput(
                "group element is numerically singular".into(),
            ));
        }
        Ok(GroupElement { matrix })
    }

    pub fn identity(size: usize) -> Self {
        GroupElement {
            matrix: DMatrix::identity(size, size),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    /// `||g - I||_2`, the distance to the identity in spectral norm.
    pub fn distance_to_identity(&self) -> f64 {
        let n = self.size();
        linalg::spectral_norm(&(&self.matrix - DMatrix::<f64>::identity(n, n)))
    }
}

// Pade [6/6] coefficients of the exponential.
const PADE6: [f64; 7] = [
    1.0,
    0.5,
    5.0 / 44.0,
    1.0 / 66.0,
    1.0 / 792.0,
    1.0 / 15840.0,
    1.0 / 665280.0,
];

/// Matrix exponential by scaling and squaring with a [6/6] Pade approximant.
pub fn mat_exp(a: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.nrows(), a.ncols(), "mat_exp needs a square matrix");
    let n = a.nrows();
    let norm = a.iter().map(|v| v.abs()).fold(0.0_f64, f64::max) * n as f64;
    let squarings = if norm > 0.5 {
        ((norm / 0.5).log2().ceil() as i32).max(0)
    } else {
        0
    };
    let scaled = a / 2f64.powi(squarings);

    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let ident = DMatrix::<f64>::identity(n, n);
    let even = &ident * PADE6[0] + &a2 * PADE6[2] + &a4 * PADE6[4] + &a6 * PADE6[6];
    let odd = &scaled * (&ident * PADE6[1] + &a2 * PADE6[3] + &a4 * PADE6[5]);
    let num = &even + &odd;
    let den = &even - &odd;
    let mut result = den
        .lu()
        .solve(&num)
        .expect("Pade denominator is well conditioned after scaling");
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Principal matrix logarithm by inverse scaling and squaring.
///
/// Restricted to `||g - I||_2 < radius` (see [`DEFAULT_LOG_RADIUS`]); inside
/// that ball the spectrum stays off the closed negative real axis, so the
/// principal branch is well defined.
pub fn mat_log(g: &DMatrix<f64>, radius: f64) -> Result<DMatrix<f64>, CoreError> {
    if g.nrows() != g.ncols() || g.nrows() == 0 {
        return Err(CoreError::InvalidInput(
            "mat_log needs a square matrix".into(),
        ));
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::InvalidInput(
            "mat_log input has non-finite entries".into(),
        ));
    }
    let n = g.nrows();
    let ident = DMatrix::<f64>::identity(n, n);
    let dist = linalg::spectral_norm(&(g - &ident));
    if dist >= radius {
        return Err(CoreError::OutOfChartDomain(format!(
            "||g - I|| = {dist:.6} is outside the logarithm chart (radius {radius})"
        )));
    }

    // Square roots until the Mercator series converges fast.
    let mut y = g.clone();
    let mut doublings = 0u32;
    while linalg::spectral_norm(&(&y - &ident)) > 0.25 {
        y = sqrtm_denman_beavers(&y)?;
        doublings += 1;
        if doublings > 40 {
            return Err(CoreError::NoConvergence {
                context: "mat_log inverse scaling".into(),
                iterations: doublings as usize,
                residual: linalg::spectral_norm(&(&y - &ident)),
            });
        }
    }

    let e = &y - &ident;
    let mut log_y = DMatrix::zeros(n, n);
    let mut power = e.clone();
    for k in 1..=40 {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        log_y += &power * (sign / k as f64);
        power = &power * &e;
    }
    Ok(log_y * 2f64.powi(doublings as i32))
}

/// Principal square root via the Denman–Beavers iteration.
fn sqrtm_denman_beavers(a: &DMatrix<f64>) -> Result<DMatrix<f64>, CoreError> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = DMatrix::<f64>::identity(n, n);
    for iteration in 0..60 {
        let y_inv = y.clone().try_inverse().ok_or_else(|| {
            CoreError::OutOfChartDomain("square-root iterate became singular".into())
        })?;
        let z_inv = z.clone().try_inverse().ok_or_else(|| {
            CoreError::OutOfChartDomain("square-root iterate became singular".into())
        })?;
        let y_next = (&y + z_inv) * 0.5;
        let z_next = (&z + y_inv) * 0.5;
        let delta = (&y_next - &y).norm();
        y = y_next;
        z = z_next;
        if delta < 1e-15 * y.norm().max(1.0) {
            return Ok(y);
        }
        let _ = iteration;
    }
    let residual = (&y * &y - a).norm();
    if residual < 1e-12 * a.norm().max(1.0) {
        Ok(y)
    } else {
        Err(CoreError::NoConvergence {
            context: "Denman-Beavers square root".into(),
            iterations: 60,
            residual,
        })
    }
}

//! Symmetric decompositions of a Lie algebra under an involutive
//! automorphism, and the algebra-level homogeneity conditions:
//!
//! - H1: the involution squares to the identity and fixes the isotropy
//!   subalgebra pointwise,
//! - H2: the `-1` eigenspace generates the whole algebra under the bracket,
//! - H3: the largest ideal contained in the isotropy subalgebra is trivial.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::CoreError;
use crate::lie::{GroupElement, LieAlgebraSpec};
use crate::linalg;

/// Default relative singular-value cutoff for all subspace fixpoint loops.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// An involutive automorphism of the algebra, as a matrix on coordinates.
#[derive(Debug, Clone)]
pub struct Involution {
    sigma: DMatrix<f64>,
    group_element: Option<GroupElement>,
    involution_residual: f64,
    automorphism_residual: f64,
}

impl Involution {
    /// Builds from an explicit coordinate matrix.
    pub fn from_sigma(
        spec: &LieAlgebraSpec,
        sigma: DMatrix<f64>,
        tol: f64,
    ) -> Result<Self, CoreError> {
        Self::build(spec, sigma, None, tol)
    }

    /// Builds `sigma = Ad(h)` from a group element.
    pub fn from_group_element(
        spec: &LieAlgebraSpec,
        h: GroupElement,
        tol: f64,
    ) -> Result<Self, CoreError> {
        let sigma = spec.adjoint(&h, tol.max(1e-12))?;
        Self::build(spec, sigma, Some(h), tol)
    }

    fn build(
        spec: &LieAlgebraSpec,
        sigma: DMatrix<f64>,
        group_element: Option<GroupElement>,
        tol: f64,
    ) -> Result<Self, CoreError> {
        let n = spec.dim();
        if sigma.nrows() != n || sigma.ncols() != n {
            return Err(CoreError::dim(n, sigma.nrows()));
        }
        let involution_residual =
            linalg::spectral_norm(&(&sigma * &sigma - DMatrix::<f64>::identity(n, n)));
        if involution_residual > tol {
            return Err(CoreError::NotInvolutive {
                residual: involution_residual,
            });
        }
        let automorphism_residual = automorphism_residual(spec, &sigma);
        if automorphism_residual > tol {
            return Err(CoreError::NotAutomorphism {
                residual: automorphism_residual,
            });
        }
        Ok(Involution {
            sigma,
            group_element,
            involution_residual,
            automorphism_residual,
        })
    }

    /// Attaches the group element realizing this involution, enabling the
    /// matrix-level commutation check without deriving `sigma` from it.
    pub fn with_group_element(mut self, h: GroupElement) -> Self {
        self.group_element = Some(h);
        self
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn group_element(&self) -> Option<&GroupElement> {
        self.group_element.as_ref()
    }

    pub fn involution_residual(&self) -> f64 {
        self.involution_residual
    }

    pub fn automorphism_residual(&self) -> f64 {
        self.automorphism_residual
    }
}

/// `max_{i,j} || sigma [e_i, e_j] - [sigma e_i, sigma e_j] ||`.
pub fn automorphism_residual(spec: &LieAlgebraSpec, sigma: &DMatrix<f64>) -> f64 {
    let n = spec.dim();
    let basis = DMatrix::<f64>::identity(n, n);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let ei = basis.column(i).into_owned();
            let ej = basis.column(j).into_owned();
            let lhs = sigma * spec.bracket(&ei, &ej).expect("dims agree");
            let si = sigma * &ei;
            let sj = sigma * &ej;
            let rhs = spec.bracket(&si, &sj).expect("dims agree");
            worst = worst.max((lhs - rhs).norm());
        }
    }
    worst
}

/// The `+1`/`-1` eigenspaces of an involution together with a declared
/// isotropy subalgebra inside the fixed space.
#[derive(Debug, Clone)]
pub struct SymmetricDecomposition {
    gplus: DMatrix<f64>,
    gminus: DMatrix<f64>,
    k: DMatrix<f64>,
    bracket_residuals: EigenspaceBracketResiduals,
}

/// How well the eigenspaces respect the bracket relations
/// `[g+,g+] in g+`, `[g+,g-] in g-`, `[g-,g-] in g+`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EigenspaceBracketResiduals {
    pub plus_plus: f64,
    pub plus_minus: f64,
    pub minus_minus: f64,
}

impl SymmetricDecomposition {
    /// Orthonormal basis of the `+1` eigenspace, as matrix columns.
    pub fn gplus(&self) -> &DMatrix<f64> {
        &self.gplus
    }

    /// Orthonormal basis of the `-1` eigenspace, as matrix columns.
    pub fn gminus(&self) -> &DMatrix<f64> {
        &self.gminus
    }

    /// Orthonormal basis of the declared isotropy subalgebra.
    pub fn k(&self) -> &DMatrix<f64> {
        &self.k
    }

    pub fn bracket_residuals(&self) -> EigenspaceBracketResiduals {
        self.bracket_residuals
    }
}

/// Splits the algebra into the eigenspaces of the involution via the
/// projectors `(I +- sigma)/2` and validates the declared isotropy.
pub fn eigensplit(
    spec: &LieAlgebraSpec,
    involution: &Involution,
    k_basis: &[DVector<f64>],
    tol: f64,
) -> Result<SymmetricDecomposition, CoreError> {
    let n = spec.dim();
    let sigma = involution.sigma();
    let ident = DMatrix::<f64>::identity(n, n);
    let p_plus = (&ident + sigma) * 0.5;
    let p_minus = (&ident - sigma) * 0.5;
    // Eigenvalues are +-1, so the projector singular values cluster at 0/1
    // and a fixed 0.5 cutoff is unambiguous.
    let gplus = linalg::orthonormal_column_span(&p_plus, 0.5);
    let gminus = linalg::orthonormal_column_span(&p_minus, 0.5);
    if gplus.ncols() + gminus.ncols() != n {
        return Err(CoreError::NotInvolutive {
            residual: involution.involution_residual(),
        });
    }
    for j in 0..gplus.ncols() {
        let v = gplus.column(j).into_owned();
        if (sigma * &v - &v).norm() > tol.max(1e-12) * 10.0 {
            return Err(CoreError::NotInvolutive {
                residual: (sigma * &v - &v).norm(),
            });
        }
    }
    for j in 0..gminus.ncols() {
        let v = gminus.column(j).into_owned();
        if (sigma * &v + &v).norm() > tol.max(1e-12) * 10.0 {
            return Err(CoreError::NotInvolutive {
                residual: (sigma * &v + &v).norm(),
            });
        }
    }

    for (idx, kv) in k_basis.iter().enumerate() {
        if kv.len() != n {
            return Err(CoreError::dim(n, kv.len()));
        }
        if (sigma * kv - kv).norm() > tol * (1.0 + kv.norm()) {
            return Err(CoreError::InvalidInput(format!(
                "isotropy vector {idx} is not fixed by the involution"
            )));
        }
    }
    let k = linalg::orthonormal_column_span(
        &linalg::columns_from_vectors(n, k_basis),
        DEFAULT_RANK_TOL,
    );
    if k.ncols() != k_basis.len() {
        return Err(CoreError::InvalidInput(
            "isotropy basis vectors are linearly dependent".into(),
        ));
    }
    // [k, k] must stay inside k.
    let kk = spec.pairwise_brackets(&k, &k);
    for j in 0..kk.ncols() {
        let v = kk.column(j).into_owned();
        if linalg::distance_to_span(&k, &v) > tol * (1.0 + v.norm()) {
            return Err(CoreError::InvalidInput(
                "declared isotropy basis does not span a subalgebra".into(),
            ));
        }
    }

    let span_residual = |target: &DMatrix<f64>, vectors: &DMatrix<f64>| -> f64 {
        (0..vectors.ncols())
            .map(|j| linalg::distance_to_span(target, &vectors.column(j).into_owned()))
            .fold(0.0, f64::max)
    };
    let bracket_residuals = EigenspaceBracketResiduals {
        plus_plus: span_residual(&gplus, &spec.pairwise_brackets(&gplus, &gplus)),
        plus_minus: span_residual(&gminus, &spec.pairwise_brackets(&gplus, &gminus)),
        minus_minus: span_residual(&gplus, &spec.pairwise_brackets(&gminus, &gminus)),
    };

    Ok(SymmetricDecomposition {
        gplus,
        gminus,
        k,
        bracket_residuals,
    })
}

/// A bracket-closed subspace produced by [`bracket_generate`], with the
/// dimension chain of the fixpoint iteration as witness.
#[derive(Debug, Clone)]
pub struct GeneratedSubalgebra {
    pub basis: DMatrix<f64>,
    pub dim_chain: Vec<usize>,
}

/// Smallest bracket-closed subspace containing the seed: alternately adjoin
/// pairwise brackets and re-orthonormalize until the rank stops growing.
pub fn bracket_generate(
    spec: &LieAlgebraSpec,
    seed: &[DVector<f64>],
    rank_tol: f64,
) -> Result<GeneratedSubalgebra, CoreError> {
    let n = spec.dim();
    for v in seed {
        if v.len() != n {
            return Err(CoreError::dim(n, v.len()));
        }
    }
    let mut basis =
        linalg::orthonormal_column_span(&linalg::columns_from_vectors(n, seed), rank_tol);
    let mut dim_chain = vec![basis.ncols()];
    if basis.ncols() == 0 || basis.ncols() == n {
        return Ok(GeneratedSubalgebra { basis, dim_chain });
    }
    loop {
        let brackets = spec.pairwise_brackets(&basis, &basis);
        let mut cols = linalg::vectors_from_columns(&basis);
        cols.extend(linalg::vectors_from_columns(&brackets));
        let next =
            linalg::orthonormal_column_span(&linalg::columns_from_vectors(n, &cols), rank_tol);
        let prev_dim = basis.ncols();
        basis = next;
        dim_chain.push(basis.ncols());
        if basis.ncols() == prev_dim || basis.ncols() == n {
            break;
        }
    }
    Ok(GeneratedSubalgebra { basis, dim_chain })
}

/// The largest ideal of the algebra contained in the given subalgebra, via
/// the shrinking fixpoint `a_{i+1} = { x in a_i : [g, x] in a_i }`.
#[derive(Debug, Clone)]
pub struct MaximalContainedIdeal {
    pub basis: DMatrix<f64>,
    pub dim_chain: Vec<usize>,
}

pub fn maximal_ideal_in(
    spec: &LieAlgebraSpec,
    k_basis: &[DVector<f64>],
    rank_tol: f64,
) -> Result<MaximalContainedIdeal, CoreError> {
    let n = spec.dim();
    for v in k_basis {
        if v.len() != n {
            return Err(CoreError::dim(n, v.len()));
        }
    }
    let ads: Vec<DMatrix<f64>> = (0..n)
        .map(|i| {
            let e = DVector::from_fn(n, |r, _| if r == i { 1.0 } else { 0.0 });
            spec.ad(&e).expect("basis vector dims agree")
        })
        .collect();
    // Null-space decisions are made against the size of the adjoint action,
    // not the constraint's own largest singular value: a constraint that is
    // pure rounding noise must count as all-kernel.
    let constraint_scale = ads
        .iter()
        .map(linalg::spectral_norm)
        .fold(1.0_f64, f64::max);

    let mut basis =
        linalg::orthonormal_column_span(&linalg::columns_from_vectors(n, k_basis), rank_tol);
    let mut dim_chain = vec![basis.ncols()];
    if basis.ncols() == 0 {
        return Ok(MaximalContainedIdeal { basis, dim_chain });
    }
    loop {
        let r = basis.ncols();
        let projector = DMatrix::<f64>::identity(n, n) - &basis * basis.transpose();
        let mut constraint = DMatrix::zeros(n * n, r);
        for (j, ad_e) in ads.iter().enumerate() {
            let block = &projector * ad_e * &basis;
            constraint.view_mut((j * n, 0), (n, r)).copy_from(&block);
        }
        let kernel = kernel_basis(&constraint, rank_tol * constraint_scale);
        let next = if kernel.ncols() == 0 {
            DMatrix::zeros(n, 0)
        } else {
            linalg::orthonormal_column_span(&(&basis * kernel), rank_tol)
        };
        let prev_dim = basis.ncols();
        basis = next;
        dim_chain.push(basis.ncols());
        if basis.ncols() == prev_dim || basis.ncols() == 0 {
            break;
        }
    }
    Ok(MaximalContainedIdeal { basis, dim_chain })
}

/// Orthonormal basis of the (right) null space of `mat`, with an absolute
/// singular-value threshold; requires `nrows >= ncols`, which every caller
/// here satisfies by construction.
fn kernel_basis(mat: &DMatrix<f64>, abs_tol: f64) -> DMatrix<f64> {
    let cols = mat.ncols();
    assert!(mat.nrows() >= cols, "kernel_basis expects a tall matrix");
    if cols == 0 {
        return DMatrix::zeros(0, 0);
    }
    let svd = mat.clone().svd(false, true);
    let v_t = svd.v_t.expect("SVD with v_t requested");
    let mut kernel_cols = Vec::new();
    for (idx, &s) in svd.singular_values.iter().enumerate() {
        if s <= abs_tol {
            kernel_cols.push(v_t.row(idx).transpose());
        }
    }
    linalg::columns_from_vectors(cols, &kernel_cols)
}

/// Outcome of the homogeneity checks, with residual witnesses.
#[derive(Debug, Clone, Serialize)]
pub struct HConditionReport {
    pub h1: H1Report,
    pub h2: H2Report,
    pub h3: H3Report,
    /// Whether `g- + [g-, g-]` already spans the whole algebra.
    pub gminus_plus_brackets_dim: usize,
    pub gminus_spans_with_brackets: bool,
    /// Global topology (connectedness, simple connectedness of `G/K`) has no
    /// algebra-level test; it is reported as unchecked, never guessed.
    pub global_topology_checked: bool,
    pub rank_tolerance: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct H1Report {
    pub holds: bool,
    pub involution_residual: f64,
    pub automorphism_residual: f64,
    pub isotropy_fixed_residual: f64,
    /// Present when both a group element and a matrix basis are available:
    /// `max_i ||h K_i - K_i h||` over the isotropy basis matrices.
    pub isotropy_commutation_residual: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct H2Report {
    pub holds: bool,
    pub gminus_dim: usize,
    pub generated_dim: usize,
    pub dim_chain: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct H3Report {
    pub holds: bool,
    pub isotropy_dim: usize,
    pub ideal_dim: usize,
    pub dim_chain: Vec<usize>,
}

impl HConditionReport {
    pub fn all_hold(&self) -> bool {
        self.h1.holds && self.h2.holds && self.h3.holds
    }
}

/// Decides H1, H2, H3 for the given algebra, involution and isotropy.
pub fn check_conditions(
    spec: &LieAlgebraSpec,
    involution: &Involution,
    k_basis: &[DVector<f64>],
    tol: f64,
    rank_tol: f64,
) -> Result<HConditionReport, CoreError> {
    let validation = spec.validate(tol.max(1e-12));
    if !validation.passed {
        return Err(CoreError::InvalidInput(format!(
            "algebra fails validation: antisymmetry {:.3e}, jacobi {:.3e}",
            validation.antisymmetry_residual, validation.jacobi_residual
        )));
    }
    let n = spec.dim();
    let sigma = involution.sigma();

    let isotropy_fixed_residual = k_basis
        .iter()
        .map(|kv| (sigma * kv - kv).norm())
        .fold(0.0, f64::max);

    let isotropy_commutation_residual = match (involution.group_element(), spec.matrix_basis()) {
        (Some(h), Some(_)) => {
            let mut worst: f64 = 0.0;
            for kv in k_basis {
                let k_mat = spec.vector_to_matrix(kv)?;
                worst = worst.max((h.matrix() * &k_mat - &k_mat * h.matrix()).norm());
            }
            Some(worst)
        }
        _ => None,
    };

    let h1_holds = involution.involution_residual() <= tol
        && involution.automorphism_residual() <= tol
        && isotropy_fixed_residual <= tol
        && isotropy_commutation_residual.is_none_or(|r| r <= tol);

    let split = eigensplit(spec, involution, k_basis, tol)?;
    let gminus_vectors = linalg::vectors_from_columns(split.gminus());
    let generated = bracket_generate(spec, &gminus_vectors, rank_tol)?;
    let h2_holds = generated.basis.ncols() == n;

    let ideal = maximal_ideal_in(spec, k_basis, rank_tol)?;
    let h3_holds = ideal.basis.ncols() == 0;

    // g- + [g-, g-] span (depth-one closure).
    let first_brackets = spec.pairwise_brackets(split.gminus(), split.gminus());
    let mut cols = linalg::vectors_from_columns(split.gminus());
    cols.extend(linalg::vectors_from_columns(&first_brackets));
    let depth_one =
        linalg::orthonormal_column_span(&linalg::columns_from_vectors(n, &cols), rank_tol);

    Ok(HConditionReport {
        h1: H1Report {
            holds: h1_holds,
            involution_residual: involution.involution_residual(),
            automorphism_residual: involution.automorphism_residual(),
            isotropy_fixed_residual,
            isotropy_commutation_residual,
        },
        h2: H2Report {
            holds: h2_holds,
            gminus_dim: split.gminus().ncols(),
            generated_dim: generated.basis.ncols(),
            dim_chain: generated.dim_chain,
        },
        h3: H3Report {
            holds: h3_holds,
            isotropy_dim: split.k().ncols(),
            ideal_dim: ideal.basis.ncols(),
            dim_chain: ideal.dim_chain,
        },
        gminus_plus_brackets_dim: depth_one.ncols(),
        gminus_spans_with_brackets: depth_one.ncols() == n,
        global_topology_checked: false,
        rank_tolerance: rank_tol,
        tolerance: tol,
    })
}

//! Reference algebras and symmetric-pair data used by tests and shipped as
//! JSON fixtures by the CLI crate.

use nalgebra::{DMatrix, DVector};

use crate::lie::{GroupElement, LieAlgebraSpec};

/// so(3) with the rotation generators `L1, L2, L3`, `[L1, L2] = L3` cyclic.
pub fn so3() -> LieAlgebraSpec {
    let mut cs = vec![vec![vec![0.0; 3]; 3]; 3];
    for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
        cs[i][j][k] = 1.0;
        cs[j][i][k] = -1.0;
    }
    let l1 = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0]);
    let l2 = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0]);
    let l3 = DMatrix::from_row_slice(3, 3, &[0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    LieAlgebraSpec::new(
        3,
        cs,
        Some(vec![l1, l2, l3]),
        Some(vec!["L1".into(), "L2".into(), "L3".into()]),
    )
    .expect("so(3) data is well formed")
}

/// Involution data for so(3): `sigma = Ad(diag(1,-1,-1))`, isotropy `span(L1)`.
pub fn so3_symmetric_pair() -> (DMatrix<f64>, GroupElement, Vec<DVector<f64>>) {
    let sigma = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0, -1.0]));
    let h = GroupElement::new(DMatrix::from_diagonal(&DVector::from_vec(vec![
        1.0, -1.0, -1.0,
    ])))
    .expect("diagonal involution is invertible");
    let k_basis = vec![DVector::from_vec(vec![1.0, 0.0, 0.0])];
    (sigma, h, k_basis)
}

/// A deliberately corrupted `h` for negative controls: `diag(1,-1,-1)`
/// composed with a rotation by 0.2 about the first axis, so `h^2 != I`.
pub fn so3_h_corrupted() -> GroupElement {
    let (c, s) = (0.2f64.cos(), 0.2f64.sin());
    GroupElement::new(DMatrix::from_row_slice(
        3,
        3,
        &[1.0, 0.0, 0.0, 0.0, -c, s, 0.0, -s, -c],
    ))
    .expect("corrupted h is still invertible")
}

/// sl(2, R) in the basis `(H, E, F)`: `[H,E] = 2E`, `[H,F] = -2F`, `[E,F] = H`.
pub fn sl2() -> LieAlgebraSpec {
    let mut cs = vec![vec![vec![0.0; 3]; 3]; 3];
    cs[0][1][1] = 2.0;
    cs[1][0][1] = -2.0;
    cs[0][2][2] = -2.0;
    cs[2][0][2] = 2.0;
    cs[1][2][0] = 1.0;
    cs[2][1][0] = -1.0;
    let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let e = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
    let f = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
    LieAlgebraSpec::new(
        3,
        cs,
        Some(vec![h, e, f]),
        Some(vec!["H".into(), "E".into(), "F".into()]),
    )
    .expect("sl(2) data is well formed")
}

/// Involution data for sl(2, R): `sigma = Ad(diag(1,-1))`, isotropy `span(H)`.
pub fn sl2_symmetric_pair() -> (DMatrix<f64>, GroupElement, Vec<DVector<f64>>) {
    let sigma = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0, -1.0]));
    let h = GroupElement::new(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0])))
        .expect("diag(1,-1) is invertible");
    let k_basis = vec![DVector::from_vec(vec![1.0, 0.0, 0.0])];
    (sigma, h, k_basis)
}

/// The Heisenberg algebra in the basis `(p, q, z)` with `[p, q] = z`,
/// realized by strictly upper-triangular 3x3 matrices.
pub fn heisenberg() -> LieAlgebraSpec {
    let mut cs = vec![vec![vec![0.0; 3]; 3]; 3];
    cs[0][1][2] = 1.0;
    cs[1][0][2] = -1.0;
    let p = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let q = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
    let z = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    LieAlgebraSpec::new(
        3,
        cs,
        Some(vec![p, q, z]),
        Some(vec!["p".into(), "q".into(), "z".into()]),
    )
    .expect("Heisenberg data is well formed")
}

/// Involution `sigma(p) = -p, sigma(q) = -q, sigma(z) = z`; together with
/// the central isotropy `span(z)` this is the fixture whose maximal ideal
/// inside the isotropy is nontrivial.
pub fn heisenberg_sigma_z_fixed() -> (DMatrix<f64>, Vec<DVector<f64>>) {
    let sigma = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -1.0, 1.0]));
    let k_basis = vec![DVector::from_vec(vec![0.0, 0.0, 1.0])];
    (sigma, k_basis)
}

/// Involution `sigma(p) = -p, sigma(q) = q, sigma(z) = -z` with trivial
/// isotropy; its `-1` eigenspace `span(p, z)` is bracket-closed, so it does
/// not generate the whole algebra.
pub fn heisenberg_sigma_q_fixed() -> (DMatrix<f64>, Vec<DVector<f64>>) {
    let sigma = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 1.0, -1.0]));
    (sigma, Vec::new())
}

/// The abelian algebra of the given dimension (no matrix basis).
pub fn abelian(dim: usize) -> LieAlgebraSpec {
    let cs = vec![vec![vec![0.0; dim]; dim]; dim];
    LieAlgebraSpec::new(dim, cs, None, None).expect("abelian data is well formed")
}

/// so(3) + R: the rotation algebra with an appended central flat direction,
/// realized by 4x4 block matrices. The reflexion model built on it acts as
/// the identity along the flat axis, which is the non-transitive fixture.
pub fn so3_flat() -> LieAlgebraSpec {
    let mut cs = vec![vec![vec![0.0; 4]; 4]; 4];
    for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
        cs[i][j][k] = 1.0;
        cs[j][i][k] = -1.0;
    }
    let so3_spec = so3();
    let embed = |b: &DMatrix<f64>| {
        let mut m = DMatrix::zeros(4, 4);
        m.view_mut((0, 0), (3, 3)).copy_from(b);
        m
    };
    let mut basis: Vec<DMatrix<f64>> = so3_spec.matrix_basis().unwrap().iter().map(embed).collect();
    let mut flat = DMatrix::zeros(4, 4);
    flat[(3, 3)] = 1.0;
    basis.push(flat);
    LieAlgebraSpec::new(
        4,
        cs,
        Some(basis),
        Some(vec!["L1".into(), "L2".into(), "L3".into(), "Z".into()]),
    )
    .expect("so(3)+R data is well formed")
}

/// Involution data for so(3) + R: `h = diag(1,-1,-1,1)`, isotropy `span(L1)`.
pub fn so3_flat_symmetric_pair() -> (DMatrix<f64>, GroupElement, Vec<DVector<f64>>) {
    let sigma = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0, -1.0, 1.0]));
    let h = GroupElement::new(DMatrix::from_diagonal(&DVector::from_vec(vec![
        1.0, -1.0, -1.0, 1.0,
    ])))
    .expect("diagonal involution is invertible");
    let k_basis = vec![DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0])];
    (sigma, h, k_basis)
}

//! Chart-level checks of the homogeneous reflexion model: coset
//! normalization, the reflexion axioms, the double-reflexion translation
//! identity, and the projected right-invariant fields.

use nalgebra::{DMatrix, DVector};
use reflexia_core::error::CoreError;
use reflexia_core::fixtures;
use reflexia_core::lie::{mat_exp, GroupElement, LieAlgebraSpec};
use reflexia_core::model::{AxiomSampleConfig, ChartConfig, HomogeneousReflexionModel};
use reflexia_core::sampling::BallSampler;
use reflexia_core::symmetric::Involution;

fn so3_model(trust_radius: f64) -> HomogeneousReflexionModel {
    let spec = fixtures::so3();
    let (_, h, k) = fixtures::so3_symmetric_pair();
    let inv = Involution::from_group_element(&spec, h.clone(), 1e-9).unwrap();
    HomogeneousReflexionModel::new(spec, &inv, &k, h, trust_radius, ChartConfig::default()).unwrap()
}

fn sl2_model(trust_radius: f64) -> HomogeneousReflexionModel {
    let spec = fixtures::sl2();
    let (_, h, k) = fixtures::sl2_symmetric_pair();
    let inv = Involution::from_group_element(&spec, h.clone(), 1e-9).unwrap();
    HomogeneousReflexionModel::new(spec, &inv, &k, h, trust_radius, ChartConfig::default()).unwrap()
}

fn so3_corrupted_model(trust_radius: f64) -> HomogeneousReflexionModel {
    let spec = fixtures::so3();
    let (sigma, _, k) = fixtures::so3_symmetric_pair();
    let inv = Involution::from_sigma(&spec, sigma, 1e-9).unwrap();
    let h = fixtures::so3_h_corrupted();
    HomogeneousReflexionModel::new_unchecked(
        spec,
        &inv,
        &k,
        h,
        trust_radius,
        ChartConfig::default(),
    )
    .unwrap()
}

#[test]
fn chart_dims_match_quotient() {
    let model = so3_model(0.3);
    assert_eq!(model.chart_dim(), 2);
    assert_eq!(model.gminus_dim(), 2);
    let flat_spec = fixtures::so3_flat();
    let (_, h, k) = fixtures::so3_flat_symmetric_pair();
    let inv = Involution::from_group_element(&flat_spec, h.clone(), 1e-9).unwrap();
    let flat = HomogeneousReflexionModel::new(flat_spec, &inv, &k, h, 0.3, ChartConfig::default())
        .unwrap();
    assert_eq!(flat.chart_dim(), 3);
    assert_eq!(flat.gminus_dim(), 2);
}

#[test]
fn strict_constructor_rejects_corrupted_h() {
    let spec = fixtures::so3();
    let (sigma, _, k) = fixtures::so3_symmetric_pair();
    let inv = Involution::from_sigma(&spec, sigma, 1e-9).unwrap();
    let h = fixtures::so3_h_corrupted();
    let out = HomogeneousReflexionModel::new(spec, &inv, &k, h, 0.3, ChartConfig::default());
    assert!(out.is_err());
}

#[test]
fn normalize_identity_gives_origin() {
    let model = so3_model(0.3);
    let (x, z) = model.coset_normalize(&DMatrix::identity(3, 3)).unwrap();
    assert!(x.norm() < 1e-12);
    assert!(z.norm() < 1e-12);
}

#[test]
fn normalize_recovers_split_factors() {
    let model = so3_model(0.3);
    let spec = model.spec();
    // X0 in span(m) = span(L2, L3), Z0 in k = span(L1).
    let x0 = DVector::from_vec(vec![0.0, 0.12, -0.08]);
    let z0 = DVector::from_vec(vec![0.1, 0.0, 0.0]);
    let g = mat_exp(&spec.vector_to_matrix(&x0).unwrap())
        * mat_exp(&spec.vector_to_matrix(&z0).unwrap());
    let (x, z) = model.coset_normalize(&g).unwrap();
    // Reassembly residual is the contract.
    let rebuilt = mat_exp(&spec.vector_to_matrix(&(model.m_basis() * &x)).unwrap())
        * mat_exp(
            &spec
                .vector_to_matrix(&(model.decomposition().k() * &z))
                .unwrap(),
        );
    assert!((rebuilt - &g).norm() <= 1e-10);
    // Local uniqueness: the recovered coordinates are the original factors.
    let x_alg = model.m_basis() * &x;
    let z_alg = model.decomposition().k() * &z;
    assert!((x_alg - &x0).norm() < 1e-9);
    assert!((z_alg - &z0).norm() < 1e-9);
}

#[test]
fn normalize_rejects_far_elements() {
    let model = so3_model(0.3);
    let far = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 3.0, 3.0]));
    assert!(matches!(
        model.coset_normalize(&far),
        Err(CoreError::OutOfChartDomain(_))
    ));
}

#[test]
fn reflexion_fixes_its_base_point() {
    let model = so3_model(0.3);
    let mut sampler = BallSampler::new(3, model.chart_dim(), 0.1);
    for _ in 0..50 {
        let x = sampler.draw();
        let sxx = model.reflexion(&x, &x).unwrap();
        assert!((sxx - &x).norm() < 1e-10);
    }
}

#[test]
fn base_reflexion_negates_gminus_chart() {
    // At the identity coset the reflexion is Ad(h), which is -1 on g-.
    let model = so3_model(0.3);
    let zero = DVector::zeros(2);
    let y = DVector::from_vec(vec![0.07, -0.045]);
    let sy = model.reflexion(&zero, &y).unwrap();
    assert!((sy + &y).norm() < 1e-10);
}

#[test]
fn reflexion_is_involutive_on_random_pairs() {
    for model in [so3_model(0.3), sl2_model(0.3)] {
        let mut sampler = BallSampler::new(11, model.chart_dim(), 0.1);
        let mut worst: f64 = 0.0;
        for _ in 0..500 {
            let x = sampler.draw();
            let y = sampler.draw();
            let back = model
                .reflexion(&x, &model.reflexion(&x, &y).unwrap())
                .unwrap();
            worst = worst.max((back - &y).norm());
        }
        assert!(worst <= 1e-9, "involution residual {worst:.3e}");
    }
}

#[test]
fn reflexion_does_not_depend_on_coset_representative() {
    let model = so3_model(0.3);
    let spec = model.spec();
    let mut sampler = BallSampler::new(17, 2, 0.1);
    for i in 0..20 {
        let x = sampler.draw();
        let y = sampler.draw();
        let base = model.reflexion(&x, &y).unwrap();
        // Multiply the representative of y by exp(Z), Z in k.
        let z = DVector::from_vec(vec![0.05 + 0.01 * i as f64, 0.0, 0.0]);
        let rep =
            model.chart_representative(&y).unwrap() * mat_exp(&spec.vector_to_matrix(&z).unwrap());
        let moved = model.reflexion_of_representative(&x, &rep).unwrap();
        assert!((moved - &base).norm() <= 1e-9);
    }
}

#[test]
fn double_reflexion_through_base_is_identity() {
    let model = so3_model(0.3);
    let zero = DVector::zeros(2);
    let y = DVector::from_vec(vec![0.06, 0.09]);
    let out = model.double_reflexion(&zero, &y).unwrap();
    assert!((out - &y).norm() < 1e-10);
}

#[test]
fn double_reflexion_is_translation_by_exp_2x_so3() {
    // For x along a g- direction, S_x S_0 acts as left translation by
    // exp(2X); the right side is an independent matrix-product oracle.
    let model = so3_model(0.3);
    let spec = model.spec();
    let mut sampler = BallSampler::new(23, 2, 0.1);
    let mut worst: f64 = 0.0;
    for i in 0..30 {
        let t = 0.02 + 0.003 * i as f64;
        let x = DVector::from_vec(vec![t, 0.0]); // L2 direction
        let y = sampler.draw();
        let lhs = model.double_reflexion(&x, &y).unwrap();
        let x_alg = model.m_basis() * &x;
        let translation = mat_exp(&(spec.vector_to_matrix(&x_alg).unwrap() * 2.0));
        let rhs = model.translation_chart(&translation, &y).unwrap();
        worst = worst.max((lhs - rhs).norm());
    }
    assert!(worst <= 1e-8, "double reflexion residual {worst:.3e}");
}

#[test]
fn double_reflexion_is_translation_by_exp_2x_sl2() {
    let model = sl2_model(0.3);
    let spec = model.spec();
    let mut sampler = BallSampler::new(29, 2, 0.08);
    let mut worst: f64 = 0.0;
    for i in 0..30 {
        let t = 0.02 + 0.003 * i as f64;
        // E + F direction expressed in chart coordinates.
        let x_alg = DVector::from_vec(vec![0.0, t, t]);
        let x = model.m_basis().transpose() * &x_alg;
        let y = sampler.draw();
        let lhs = model.double_reflexion(&x, &y).unwrap();
        let translation = mat_exp(&(spec.vector_to_matrix(&x_alg).unwrap() * 2.0));
        let rhs = model.translation_chart(&translation, &y).unwrap();
        worst = worst.max((lhs - rhs).norm());
    }
    assert!(worst <= 1e-8, "double reflexion residual {worst:.3e}");
}

#[test]
fn left_translation_equivariance() {
    // S_{t f}(t g) = t S_f(g) for a small group translation t.
    let model = so3_model(0.4);
    let spec = model.spec();
    let t_alg = DVector::from_vec(vec![0.04, -0.03, 0.05]);
    let t_mat = mat_exp(&spec.vector_to_matrix(&t_alg).unwrap());
    let mut sampler = BallSampler::new(31, 2, 0.08);
    for _ in 0..20 {
        let x = sampler.draw();
        let y = sampler.draw();
        let tx = model
            .chart_of_group(&(&t_mat * model.chart_representative(&x).unwrap()))
            .unwrap();
        let ty = model
            .chart_of_group(&(&t_mat * model.chart_representative(&y).unwrap()))
            .unwrap();
        let lhs = model.reflexion(&tx, &ty).unwrap();
        let sxy = model.reflexion(&x, &y).unwrap();
        let rhs = model
            .chart_of_group(&(&t_mat * model.chart_representative(&sxy).unwrap()))
            .unwrap();
        assert!((lhs - rhs).norm() <= 1e-9);
    }
}

#[test]
fn right_invariant_field_of_zero_vanishes() {
    let model = so3_model(0.3);
    let y = DVector::from_vec(vec![0.05, -0.02]);
    let field = model.right_invariant_field(&DVector::zeros(3), &y).unwrap();
    assert!(field.norm() < 1e-9);
}

#[test]
fn right_invariant_field_at_origin_is_m_projection() {
    let model = so3_model(0.3);
    let v = DVector::from_vec(vec![0.3, -0.7, 0.2]); // mixes k and m parts
    let zero = DVector::zeros(2);
    let got = model.right_invariant_field(&v, &zero).unwrap();
    let expected = model.m_basis().transpose() * &v;
    assert!((got - expected).norm() < 1e-7);
}

#[test]
fn double_reflexion_derivative_matches_field_difference() {
    // d/dt at 0 of S_{x(t)} S_0 equals R_v - R_{sigma(v)} pointwise, where
    // x(t) is the chart curve of exp(t v).
    let model = so3_model(0.4);
    let spec = model.spec();
    let fd = 1e-5;
    let mut sampler = BallSampler::new(37, 2, 0.08);
    for v in [
        DVector::from_vec(vec![0.0, 1.0, 0.0]),
        DVector::from_vec(vec![0.0, 0.4, -0.8]),
        DVector::from_vec(vec![0.5, 0.3, 0.2]), // includes a k component
    ] {
        let v_mat = spec.vector_to_matrix(&v).unwrap();
        for _ in 0..5 {
            let y = sampler.draw();
            let curve = |t: f64| -> DVector<f64> {
                let x_t = model.chart_of_group(&mat_exp(&(&v_mat * t))).unwrap();
                model.double_reflexion(&x_t, &y).unwrap()
            };
            let derivative = (curve(fd) - curve(-fd)) / (2.0 * fd);
            let sigma_v = model.sigma() * &v;
            let expected = model.right_invariant_field(&v, &y).unwrap()
                - model.right_invariant_field(&sigma_v, &y).unwrap();
            assert!(
                (derivative - expected).norm() <= 1e-6,
                "derivative identity residual too large"
            );
        }
    }
}

#[test]
fn axioms_hold_on_positive_fixtures() {
    for model in [so3_model(0.3), sl2_model(0.3)] {
        let report = model.verify_axioms(&AxiomSampleConfig {
            samples: 200,
            seed: 42,
            tolerance: 1e-9,
        });
        assert!(report.all_pass(), "{report:?}");
        assert!(report.skip_rate < 0.5);
    }
}

#[test]
fn corrupted_h_breaks_involutivity() {
    let model = so3_corrupted_model(0.3);
    let report = model.verify_axioms(&AxiomSampleConfig {
        samples: 200,
        seed: 42,
        tolerance: 1e-9,
    });
    assert!(report.a2_max_residual.unwrap() > 1e-2, "{report:?}");
    assert!(!report.all_pass());
}

#[test]
fn black_box_wraps_the_model() {
    let model = so3_model(0.3);
    let bb = model.as_black_box();
    assert_eq!(bb.dim(), 2);
    assert_eq!(bb.domain_radius(), 0.3);
    let x = DVector::from_vec(vec![0.05, 0.01]);
    let y = DVector::from_vec(vec![-0.03, 0.08]);
    assert_eq!(bb.eval(&x, &y).unwrap(), model.reflexion(&x, &y).unwrap());
    let outside = DVector::from_vec(vec![0.31, 0.0]);
    assert!(bb.eval(&outside, &y).is_err());
}

#[test]
fn model_requires_matrix_basis() {
    let spec = fixtures::abelian(3);
    let inv = Involution::from_sigma(&spec, DMatrix::identity(3, 3), 1e-9).unwrap();
    let h = GroupElement::identity(3);
    let out = HomogeneousReflexionModel::new(spec, &inv, &[], h, 0.3, ChartConfig::default());
    assert!(matches!(out, Err(CoreError::InvalidInput(_))));
}

#[test]
fn validated_spec_required_for_conditions() {
    // A spec breaking the Jacobi identity is rejected upstream.
    let mut cs = vec![vec![vec![0.0; 3]; 3]; 3];
    cs[0][1][2] = 1.0;
    cs[1][0][2] = -1.0;
    cs[1][2][0] = 1.0;
    cs[2][1][0] = -1.0;
    cs[2][0][1] = 1.0;
    cs[0][2][1] = -1.0;
    // Perturb one constant pair antisymmetrically to break Jacobi.
    cs[1][2][1] = 0.4;
    cs[2][1][1] = -0.4;
    let spec = LieAlgebraSpec::new(3, cs, None, None).unwrap();
    assert!(spec.validate(1e-9).jacobi_residual > 0.1);
}

//! Flow integration checks and the reflexion/one-parameter-group identities.

use std::sync::Arc;

use nalgebra::DVector;
use reflexia_core::error::CoreError;
use reflexia_core::fixtures;
use reflexia_core::flows::{
    automorphism_flow_check, flow_map, integrate, verify_flow_identity, FlowCheckConfig,
};
use reflexia_core::lie::mat_exp;
use reflexia_core::model::{ChartConfig, HomogeneousReflexionModel};
use reflexia_core::reconstruction::{r_field, BlackBoxReflexion, SampledVectorField};
use reflexia_core::sampling::BallSampler;
use reflexia_core::symmetric::Involution;

fn so3_model(trust_radius: f64) -> HomogeneousReflexionModel {
    let spec = fixtures::so3();
    let (_, h, k) = fixtures::so3_symmetric_pair();
    let inv = Involution::from_group_element(&spec, h.clone(), 1e-9).unwrap();
    HomogeneousReflexionModel::new(spec, &inv, &k, h, trust_radius, ChartConfig::default()).unwrap()
}

fn so3_r_field(s: &BlackBoxReflexion, axis: usize, step: f64) -> SampledVectorField {
    let mut v = DVector::zeros(s.dim());
    v[axis] = 1.0;
    r_field(
        s,
        &DVector::zeros(s.dim()),
        &v,
        step,
        format!("R(e{})", axis + 1),
    )
}

#[test]
fn zero_field_flow_is_constant() {
    let field = SampledVectorField::zero(2);
    let y0 = DVector::from_vec(vec![0.05, -0.02]);
    let traj = integrate(&field, &y0, 1.0, 100, 1.0).unwrap();
    assert_eq!(traj.points.len(), 101);
    for p in &traj.points {
        assert_eq!(p, &y0);
    }
    assert_eq!(traj.reversibility_residual.unwrap(), 0.0);
}

#[test]
fn r_field_flow_matches_exponential_translation() {
    // The flow of R_0(e1) from the base point is the geodesic
    // t -> chart(exp(t L2-direction)).
    let model = so3_model(0.5);
    let s = model.as_black_box();
    let field = so3_r_field(&s, 0, 1e-5);
    let zero = DVector::zeros(2);
    let traj = integrate(&field, &zero, 0.2, 200, 0.5).unwrap();
    let v_alg = model.m_basis().column(0).into_owned();
    let v_mat = model.spec().vector_to_matrix(&v_alg).unwrap();
    for (t, point) in traj.times.iter().zip(&traj.points) {
        let oracle = model.chart_of_group(&mat_exp(&(&v_mat * *t))).unwrap();
        assert!(
            (point - oracle).norm() <= 1e-7,
            "geodesic deviation at t = {t}"
        );
    }
    assert!(traj.reversibility_residual.unwrap() <= 1e-8);
}

#[test]
fn flow_time_reversal_returns_home() {
    let model = so3_model(0.5);
    let s = model.as_black_box();
    let field = so3_r_field(&s, 1, 1e-5);
    let y0 = DVector::from_vec(vec![0.03, -0.04]);
    let forward = flow_map(&field, &y0, 0.15, 1e-3, 0.5).unwrap();
    let back = flow_map(&field, &forward, -0.15, 1e-3, 0.5).unwrap();
    assert!((back - y0).norm() <= 1e-8);
}

#[test]
fn flow_composition_is_additive() {
    let model = so3_model(0.5);
    let s = model.as_black_box();
    let field = so3_r_field(&s, 0, 1e-5);
    let y0 = DVector::from_vec(vec![0.02, 0.05]);
    let step = flow_map(&field, &y0, 0.06, 1e-3, 0.5).unwrap();
    let two_step = flow_map(&field, &step, 0.09, 1e-3, 0.5).unwrap();
    let direct = flow_map(&field, &y0, 0.15, 1e-3, 0.5).unwrap();
    assert!((two_step - direct).norm() <= 1e-9);
}

#[test]
fn runaway_flow_reports_left_domain_with_partial_trajectory() {
    let field = SampledVectorField::constant("drift", DVector::from_vec(vec![1.0, 0.0]));
    let y0 = DVector::zeros(2);
    match integrate(&field, &y0, 1.0, 100, 0.25) {
        Err(CoreError::LeftDomain {
            completed,
            requested,
            partial,
        }) => {
            assert_eq!(requested, 100);
            assert!(completed < 30);
            assert_eq!(partial.points.len(), completed + 1);
            assert!(partial.points.iter().all(|p| p.norm() < 0.25));
        }
        other => panic!("expected LeftDomain, got {other:?}"),
    }
}

#[test]
fn flow_identity_residual_vanishes_at_t_zero() {
    let model = so3_model(0.5);
    let s = model.as_black_box();
    let field = so3_r_field(&s, 1, 1e-5);
    let report = verify_flow_identity(
        &s,
        &DVector::zeros(2),
        &field,
        &[0.0],
        &FlowCheckConfig::default(),
    )
    .unwrap();
    // Both sides reduce to S_x S_x y = y, so only eval noise remains.
    assert!(report.max_residual <= 1e-10);
}

#[test]
fn flow_identity_holds_on_so3() {
    let model = so3_model(0.5);
    let s = model.as_black_box();
    let field = so3_r_field(&s, 1, 1e-5);
    let report = verify_flow_identity(
        &s,
        &DVector::zeros(2),
        &field,
        &[0.05, 0.1, 0.15],
        &FlowCheckConfig::default(),
    )
    .unwrap();
    assert!(
        report.max_residual <= 1e-5,
        "flow identity residual {:.3e}",
        report.max_residual
    );
    assert!(report.per_time.iter().all(|tr| tr.skipped == 0));
}

#[test]
fn even_field_fails_the_parity_gate() {
    // S_0 is linear on the so(3) chart, so the radial field pulls back to
    // itself and must be rejected.
    let model = so3_model(0.5);
    let s = model.as_black_box();
    let radial = SampledVectorField::new("y", 2, Arc::new(|y: &DVector<f64>| Ok(y.clone())));
    let out = verify_flow_identity(
        &s,
        &DVector::zeros(2),
        &radial,
        &[0.05],
        &FlowCheckConfig::default(),
    );
    assert!(matches!(out, Err(CoreError::ParityViolated { .. })));
}

#[test]
fn automorphism_flow_check_zero_field() {
    let model = so3_model(0.5);
    let s = model.as_black_box();
    let field = SampledVectorField::zero(2);
    let mut sampler = BallSampler::new(3, 2, 0.05);
    let pairs: Vec<_> = (0..10).map(|_| (sampler.draw(), sampler.draw())).collect();
    let report = automorphism_flow_check(&s, &field, 0.1, &pairs, 1e-3).unwrap();
    assert!(report.max_residual <= 1e-12);
}

#[test]
fn automorphism_flow_check_r_field() {
    let model = so3_model(0.5);
    let s = model.as_black_box();
    let field = so3_r_field(&s, 1, 1e-5);
    let mut sampler = BallSampler::new(5, 2, 0.05);
    let pairs: Vec<_> = (0..10).map(|_| (sampler.draw(), sampler.draw())).collect();
    let report = automorphism_flow_check(&s, &field, 0.1, &pairs, 1e-3).unwrap();
    assert!(
        report.max_residual <= 1e-5,
        "automorphism residual {:.3e}",
        report.max_residual
    );
}

#[test]
fn automorphism_flow_check_flags_constant_field() {
    // Chart translations are not reflexion automorphisms. The flat part of
    // the defect cancels exactly, so the residual is curvature-sized
    // (about radius^2 * t); still two orders above the R-field residual.
    let model = so3_model(0.5);
    let s = model.as_black_box();
    let field = SampledVectorField::constant("const", DVector::from_vec(vec![1.0, 0.0]));
    let mut sampler = BallSampler::new(7, 2, 0.12);
    let pairs: Vec<_> = (0..10).map(|_| (sampler.draw(), sampler.draw())).collect();
    let report = automorphism_flow_check(&s, &field, 0.15, &pairs, 1e-3).unwrap();
    assert!(report.max_residual > 1e-3, "{:.3e}", report.max_residual);
    assert_eq!(report.skipped, 0);
}

#[test]
fn halving_the_rk_step_barely_moves_residuals() {
    let model = so3_model(0.5);
    let s = model.as_black_box();
    let field = so3_r_field(&s, 1, 1e-5);
    let coarse = verify_flow_identity(
        &s,
        &DVector::zeros(2),
        &field,
        &[0.1],
        &FlowCheckConfig::default(),
    )
    .unwrap();
    let fine = verify_flow_identity(
        &s,
        &DVector::zeros(2),
        &field,
        &[0.1],
        &FlowCheckConfig {
            rk_step: 5e-4,
            ..FlowCheckConfig::default()
        },
    )
    .unwrap();
    let change = (coarse.max_residual - fine.max_residual).abs() / coarse.max_residual.max(1e-300);
    assert!(change < 0.1, "step halving changed residual by {change:.3}");
}

#[test]
fn double_reflexion_generator_is_twice_the_field() {
    // d/dt at 0 of S_{phi_t(x)}(S_x y) equals 2 F(y).
    let model = so3_model(0.5);
    let s = model.as_black_box();
    let field = so3_r_field(&s, 1, 1e-5);
    let zero = DVector::zeros(2);
    let fd = 1e-4;
    let mut sampler = BallSampler::new(9, 2, 0.05);
    for _ in 0..10 {
        let y = sampler.draw();
        let reflected = s.eval(&zero, &y).unwrap();
        let forward = {
            let base = flow_map(&field, &zero, fd, 1e-5, 0.5).unwrap();
            s.eval(&base, &reflected).unwrap()
        };
        let backward = {
            let base = flow_map(&field, &zero, -fd, 1e-5, 0.5).unwrap();
            s.eval(&base, &reflected).unwrap()
        };
        let derivative = (forward - backward) / (2.0 * fd);
        let expected = field.eval(&y).unwrap() * 2.0;
        assert!((derivative - expected).norm() <= 1e-4, "generator mismatch");
    }
}

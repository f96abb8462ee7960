//! The four subcommands. Each returns the process exit code together with
//! the JSON report: 0 when every checked condition holds, 1 when a check
//! fails. Input and usage problems surface as `Err` and exit with 2.

use std::sync::Arc;

use nalgebra::DVector;
use serde_json::{json, Value};

use reflexia_core::error::CoreError;
use reflexia_core::flows::{automorphism_flow_check, verify_flow_identity, FlowCheckConfig};
use reflexia_core::model::{AxiomSampleConfig, ChartConfig, HomogeneousReflexionModel};
use reflexia_core::reconstruction::{
    compare_algebras, r_field, reconstruct_algebra, tangent_maps, tangent_split,
    ReconstructionConfig, SampledVectorField,
};
use reflexia_core::symmetric::check_conditions;

use crate::config::{LoadedInputs, RunConfig};

/// Maximum tolerated fraction of skipped axiom samples.
const SKIP_RATE_LIMIT: f64 = 0.5;

fn chart_config(config: &RunConfig) -> ChartConfig {
    ChartConfig {
        algebra_tol: config.tolerances.algebra,
        rank_tol: config.tolerances.rank,
        ..ChartConfig::default()
    }
}

fn build_model(
    config: &RunConfig,
    inputs: &LoadedInputs,
) -> Result<HomogeneousReflexionModel, String> {
    let h = inputs
        .h_matrix
        .clone()
        .ok_or_else(|| "this command needs h_matrix in the involution file".to_string())?;
    // Invariant residuals are recorded, not enforced: deliberately corrupted
    // fixtures must reach the axiom checks and fail there, with exit 1.
    HomogeneousReflexionModel::new_unchecked(
        inputs.spec.clone(),
        &inputs.involution,
        &inputs.k_basis,
        h,
        config.trust_radius,
        chart_config(config),
    )
    .map_err(|e| format!("model construction: {e}"))
}

pub fn cmd_analyze(config: &RunConfig, inputs: &LoadedInputs) -> Result<(i32, Value), String> {
    let report = check_conditions(
        &inputs.spec,
        &inputs.involution,
        &inputs.k_basis,
        config.tolerances.algebra,
        config.tolerances.rank,
    )
    .map_err(|e| format!("analyze: {e}"))?;
    let exit = if report.all_hold() { 0 } else { 1 };
    Ok((
        exit,
        json!({
            "command": "analyze",
            "config": config,
            "conditions": report,
            "pass": exit == 0,
        }),
    ))
}

pub fn cmd_verify(config: &RunConfig, inputs: &LoadedInputs) -> Result<(i32, Value), String> {
    let model = build_model(config, inputs)?;
    let report = model.verify_axioms(&AxiomSampleConfig {
        samples: config.samples,
        seed: config.seed,
        tolerance: config.tolerances.axiom,
    });
    let skip_rate_exceeded = report.skip_rate > SKIP_RATE_LIMIT;
    let pass = report.all_pass() && !skip_rate_exceeded;
    Ok((
        if pass { 0 } else { 1 },
        json!({
            "command": "verify",
            "config": config,
            "axioms": report,
            "skip_rate_exceeded": skip_rate_exceeded,
            "pass": pass,
        }),
    ))
}

pub fn cmd_roundtrip(config: &RunConfig, inputs: &LoadedInputs) -> Result<(i32, Value), String> {
    let model = build_model(config, inputs)?;
    let black_box = model.as_black_box();
    let recon_config = ReconstructionConfig {
        fd_step: config.fd.first_order,
        field_fd_step: config.fd.field_jacobian,
        cloud_per_dim: config.reconstruction.cloud_per_dim,
        fit_points: config.reconstruction.fit_points,
        rank_rel_tol: config.reconstruction.rank_rel_tol,
        fingerprint_rank_tol: config.reconstruction.fingerprint_rank_tol,
        seed: config.seed,
        ..ReconstructionConfig::default()
    };
    let zero = DVector::zeros(black_box.dim());
    // Reconstruction failures (axiom gate, unstable rank) are checked
    // conditions, not usage errors.
    let reconstruction = match reconstruct_algebra(&black_box, &zero, &recon_config) {
        Ok(r) => r,
        Err(e) => {
            return Ok((
                1,
                json!({
                    "command": "roundtrip",
                    "config": config,
                    "error": e.to_string(),
                    "pass": false,
                }),
            ))
        }
    };
    let comparison = compare_algebras(
        &reconstruction.fingerprint,
        &inputs.spec,
        config.tolerances.rank,
    );
    let pass = reconstruction.transitive && comparison.fingerprint_match;
    Ok((
        if pass { 0 } else { 1 },
        json!({
            "command": "roundtrip",
            "config": config,
            "reconstruction": reconstruction,
            "comparison": comparison,
            "pass": pass,
        }),
    ))
}

pub fn cmd_flows(config: &RunConfig, inputs: &LoadedInputs) -> Result<(i32, Value), String> {
    let model = build_model(config, inputs)?;
    let black_box = model.as_black_box();
    let n = black_box.dim();
    let zero = DVector::zeros(n);
    let flow_config = FlowCheckConfig {
        probes: config.flow.probes,
        probe_radius: config.flow.probe_radius,
        seed: config.seed,
        rk_step: config.flow.rk_step,
        parity_tol: config.flow.parity_tol,
        fd_step: config.fd.first_order,
    };

    let td = tangent_maps(&black_box, &zero, config.fd.first_order, 1e-12)
        .map_err(|e| format!("tangent maps: {e}"))?;
    let (t_minus, _) = tangent_split(&td, 0.1).map_err(|e| format!("tangent split: {e}"))?;

    let mut field_reports = Vec::new();
    let mut automorphism_reports = Vec::new();
    let mut worst: f64 = 0.0;
    let mut parity_failures = Vec::new();
    for i in 0..t_minus.ncols() {
        let v = t_minus.column(i).into_owned();
        let field = r_field(
            &black_box,
            &zero,
            &v,
            config.fd.first_order,
            format!("R_x(e{})", i + 1),
        );
        match verify_flow_identity(&black_box, &zero, &field, &config.flow.t_grid, &flow_config) {
            Ok(report) => {
                worst = worst.max(report.max_residual);
                field_reports.push(serde_json::to_value(&report).expect("serializable"));
            }
            Err(CoreError::ParityViolated { residual, .. }) => {
                parity_failures.push(json!({ "field": field.label(), "residual": residual }));
            }
            Err(e) => return Err(format!("flow identity: {e}")),
        }
        let t_max = config.flow.t_grid.iter().copied().fold(0.0_f64, f64::max);
        let mut sampler = reflexia_core::sampling::BallSampler::new(
            config.seed.wrapping_add(7),
            n,
            config.flow.probe_radius,
        );
        let pairs: Vec<_> = (0..config.flow.probes)
            .map(|_| (sampler.draw(), sampler.draw()))
            .collect();
        let auto = automorphism_flow_check(&black_box, &field, t_max, &pairs, config.flow.rk_step)
            .map_err(|e| format!("automorphism check: {e}"))?;
        worst = worst.max(auto.max_residual);
        automorphism_reports.push(serde_json::to_value(&auto).expect("serializable"));
    }

    // Optional negative control: an even field must be rejected by the
    // parity gate, turning the whole run into a failure.
    let injected = if config.inject_parity_violation {
        let radial =
            SampledVectorField::new("radial", n, Arc::new(|y: &DVector<f64>| Ok(y.clone())));
        match verify_flow_identity(
            &black_box,
            &zero,
            &radial,
            &config.flow.t_grid,
            &flow_config,
        ) {
            Err(CoreError::ParityViolated { residual, .. }) => Some(json!({
                "field": "radial",
                "rejected": true,
                "parity_residual": residual,
            })),
            Ok(_) => Some(json!({ "field": "radial", "rejected": false })),
            Err(e) => return Err(format!("injected field: {e}")),
        }
    } else {
        None
    };

    let pass = worst <= config.tolerances.flow && parity_failures.is_empty() && injected.is_none();
    Ok((
        if pass { 0 } else { 1 },
        json!({
            "command": "flows",
            "config": config,
            "flow_identity": field_reports,
            "automorphism_checks": automorphism_reports,
            "parity_failures": parity_failures,
            "injected_field": injected,
            "max_residual": worst,
            "tolerance": config.tolerances.flow,
            "pass": pass,
        }),
    ))
}

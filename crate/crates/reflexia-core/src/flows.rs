//! Flows of sampled vector fields and the identities tying one-parameter
//! automorphism groups to reflexions: for an infinitesimal automorphism `F`
//! of odd reflexion parity, `S_{phi_t(x)} S_x = phi_2t`, and the flow acts
//! by automorphisms, `phi_t(S_p q) = S_{phi_t(p)} phi_t(q)`.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::CoreError;
use crate::reconstruction::{parity_residual, BlackBoxReflexion, SampledVectorField};
use crate::sampling::BallSampler;

/// A fixed-step RK4 trajectory of a sampled field.
#[derive(Debug, Clone)]
pub struct FlowTrajectory {
    pub field_label: String,
    pub start: DVector<f64>,
    /// Increasing (or decreasing, for backward flows) grid including 0.
    pub times: Vec<f64>,
    pub points: Vec<DVector<f64>>,
    pub step: f64,
    /// `||(flow back to 0 from the endpoint) - start||`, when the backward
    /// pass stays in the domain.
    pub reversibility_residual: Option<f64>,
}

impl FlowTrajectory {
    pub fn end(&self) -> &DVector<f64> {
        self.points.last().expect("trajectory contains the start")
    }
}

fn rk4_step(
    field: &SampledVectorField,
    y: &DVector<f64>,
    dt: f64,
) -> Result<DVector<f64>, CoreError> {
    let k1 = field.eval(y)?;
    let k2 = field.eval(&(y + &k1 * (dt / 2.0)))?;
    let k3 = field.eval(&(y + &k2 * (dt / 2.0)))?;
    let k4 = field.eval(&(y + &k3 * dt))?;
    Ok(y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}

/// Grid and points of a raw integration pass.
type RawTrajectory = (Vec<f64>, Vec<DVector<f64>>);

fn integrate_raw(
    field: &SampledVectorField,
    y0: &DVector<f64>,
    t_end: f64,
    steps: usize,
    domain_radius: f64,
) -> Result<RawTrajectory, (usize, RawTrajectory)> {
    let dt = t_end / steps as f64;
    let mut times = Vec::with_capacity(steps + 1);
    let mut points = Vec::with_capacity(steps + 1);
    times.push(0.0);
    points.push(y0.clone());
    let mut y = y0.clone();
    for i in 0..steps {
        match rk4_step(field, &y, dt) {
            Ok(next) if next.norm() < domain_radius => {
                y = next;
                times.push(dt * (i + 1) as f64);
                points.push(y.clone());
            }
            _ => return Err((i, (times, points))),
        }
    }
    Ok((times, points))
}

/// Classical fourth-order integration of `field` from `y0` to `t_end`.
///
/// The trajectory must stay inside the domain ball; leaving it raises
/// [`CoreError::LeftDomain`] carrying the partial trajectory. On success the
/// endpoint is integrated back to `t = 0` and the return distance to `y0`
/// is reported as the reversibility residual.
pub fn integrate(
    field: &SampledVectorField,
    y0: &DVector<f64>,
    t_end: f64,
    steps: usize,
    domain_radius: f64,
) -> Result<FlowTrajectory, CoreError> {
    if steps == 0 {
        return Err(CoreError::InvalidInput(
            "integration needs at least one step".into(),
        ));
    }
    if y0.norm() >= domain_radius {
        return Err(CoreError::OutOfChartDomain(
            "flow start outside the domain".into(),
        ));
    }
    let dt = t_end / steps as f64;
    match integrate_raw(field, y0, t_end, steps, domain_radius) {
        Ok((times, points)) => {
            let end = points.last().expect("nonempty").clone();
            let reversibility_residual = integrate_raw(field, &end, -t_end, steps, domain_radius)
                .ok()
                .map(|(_, back)| (back.last().expect("nonempty") - y0).norm());
            Ok(FlowTrajectory {
                field_label: field.label().to_string(),
                start: y0.clone(),
                times,
                points,
                step: dt,
                reversibility_residual,
            })
        }
        Err((completed, (times, points))) => Err(CoreError::LeftDomain {
            completed,
            requested: steps,
            partial: Box::new(FlowTrajectory {
                field_label: field.label().to_string(),
                start: y0.clone(),
                times,
                points,
                step: dt,
                reversibility_residual: None,
            }),
        }),
    }
}

/// `phi_t(y0)` with a fixed step size (the step count is rounded up).
pub fn flow_map(
    field: &SampledVectorField,
    y0: &DVector<f64>,
    t: f64,
    step_size: f64,
    domain_radius: f64,
) -> Result<DVector<f64>, CoreError> {
    if t == 0.0 {
        return Ok(y0.clone());
    }
    let steps = (t.abs() / step_size).ceil().max(1.0) as usize;
    match integrate_raw(field, y0, t, steps, domain_radius) {
        Ok((_, points)) => Ok(points.last().expect("nonempty").clone()),
        Err((completed, (times, points))) => Err(CoreError::LeftDomain {
            completed,
            requested: steps,
            partial: Box::new(FlowTrajectory {
                field_label: field.label().to_string(),
                start: y0.clone(),
                times,
                points,
                step: t / steps as f64,
                reversibility_residual: None,
            }),
        }),
    }
}

/// Tuning for the flow identity checks.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FlowCheckConfig {
    pub probes: usize,
    pub probe_radius: f64,
    pub seed: u64,
    pub rk_step: f64,
    /// Gate tolerance for `(S_x)^* F = -F` before the identity is tested.
    pub parity_tol: f64,
    /// FD step for the tangent maps inside the parity gate.
    pub fd_step: f64,
}

impl Default for FlowCheckConfig {
    fn default() -> Self {
        FlowCheckConfig {
            probes: 20,
            probe_radius: 0.05,
            seed: 42,
            rk_step: 1e-3,
            parity_tol: 1e-4,
            fd_step: 1e-5,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TimeResidual {
    pub t: f64,
    pub max_residual: f64,
    pub evaluated: usize,
    pub skipped: usize,
}

/// Residuals of `S_{phi_t(x)}(S_x y) = phi_2t(y)` over a time grid.
#[derive(Debug, Clone, Serialize)]
pub struct FlowIdentityReport {
    pub field_label: String,
    pub parity_residual: f64,
    pub parity_tolerance: f64,
    pub rk_step: f64,
    pub probes: usize,
    pub per_time: Vec<TimeResidual>,
    pub max_residual: f64,
}

/// Checks the double-reflexion flow identity for a field of odd parity.
pub fn verify_flow_identity(
    s: &BlackBoxReflexion,
    x: &DVector<f64>,
    field: &SampledVectorField,
    t_grid: &[f64],
    config: &FlowCheckConfig,
) -> Result<FlowIdentityReport, CoreError> {
    let mut sampler = BallSampler::new(config.seed, s.dim(), config.probe_radius);
    let probes = sampler.draw_many(config.probes);

    let parity = parity_residual(s, x, field, &probes, config.fd_step)?;
    if parity > config.parity_tol {
        return Err(CoreError::ParityViolated {
            residual: parity,
            tolerance: config.parity_tol,
        });
    }

    let radius = s.domain_radius();
    let mut per_time = Vec::with_capacity(t_grid.len());
    let mut overall: f64 = 0.0;
    for &t in t_grid {
        let base_t = flow_map(field, x, t, config.rk_step, radius)?;
        let mut max_residual: f64 = 0.0;
        let mut evaluated = 0usize;
        let mut skipped = 0usize;
        for y in &probes {
            let outcome = (|| -> Result<f64, CoreError> {
                let reflected = s.eval(x, y)?;
                let lhs = s.eval(&base_t, &reflected)?;
                let rhs = flow_map(field, y, 2.0 * t, config.rk_step, radius)?;
                Ok((lhs - rhs).norm())
            })();
            match outcome {
                Ok(r) => {
                    evaluated += 1;
                    max_residual = max_residual.max(r);
                }
                Err(_) => skipped += 1,
            }
        }
        overall = overall.max(max_residual);
        per_time.push(TimeResidual {
            t,
            max_residual,
            evaluated,
            skipped,
        });
    }

    Ok(FlowIdentityReport {
        field_label: field.label().to_string(),
        parity_residual: parity,
        parity_tolerance: config.parity_tol,
        rk_step: config.rk_step,
        probes: config.probes,
        per_time,
        max_residual: overall,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AutomorphismFlowReport {
    pub field_label: String,
    pub t: f64,
    pub max_residual: f64,
    pub evaluated: usize,
    pub skipped: usize,
}

/// Checks directly that the flow acts by reflexion automorphisms:
/// `phi_t(S_p q) = S_{phi_t(p)} phi_t(q)` over sampled pairs.
pub fn automorphism_flow_check(
    s: &BlackBoxReflexion,
    field: &SampledVectorField,
    t: f64,
    pairs: &[(DVector<f64>, DVector<f64>)],
    rk_step: f64,
) -> Result<AutomorphismFlowReport, CoreError> {
    let radius = s.domain_radius();
    let mut max_residual: f64 = 0.0;
    let mut evaluated = 0usize;
    let mut skipped = 0usize;
    for (p, q) in pairs {
        let outcome = (|| -> Result<f64, CoreError> {
            let spq = s.eval(p, q)?;
            let lhs = flow_map(field, &spq, t, rk_step, radius)?;
            let p_t = flow_map(field, p, t, rk_step, radius)?;
            let q_t = flow_map(field, q, t, rk_step, radius)?;
            let rhs = s.eval(&p_t, &q_t)?;
            Ok((lhs - rhs).norm())
        })();
        match outcome {
            Ok(r) => {
                evaluated += 1;
                max_residual = max_residual.max(r);
            }
            Err(_) => skipped += 1,
        }
    }
    Ok(AutomorphismFlowReport {
        field_label: field.label().to_string(),
        t,
        max_residual,
        evaluated,
        skipped,
    })
}

//! Reconstruction of the transvection algebra from an opaque reflexion map.
//!
//! Everything here sees the reflexion only through point evaluations
//! `(x, y) -> S_x y` on a declared chart domain. Central differences give the
//! two tangent maps `TS_x` (second slot) and `TS^x` (first slot), whose
//! `+-1` eigenspaces split the tangent space. The fields
//! `R_x(v)(y) = 1/2 TS^{S_x y} v` extend `T-` vectors to infinitesimal
//! automorphisms; together with their first-level brackets they span a
//! finite-dimensional Lie algebra whose structure constants are fitted by
//! least squares on a sample cloud and summarized by a basis-independent
//! fingerprint.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::CoreError;
use crate::lie::{Fingerprint, LieAlgebraSpec};
use crate::linalg;
use crate::sampling::BallSampler;

type EvalFn = dyn Fn(&DVector<f64>, &DVector<f64>) -> Result<DVector<f64>, CoreError> + Send + Sync;
type FieldFn = dyn Fn(&DVector<f64>) -> Result<DVector<f64>, CoreError> + Send + Sync;

/// An opaque reflexion map on a chart of `R^n`.
#[derive(Clone)]
pub struct BlackBoxReflexion {
    dim: usize,
    domain_radius: f64,
    eval: Arc<EvalFn>,
}

impl std::fmt::Debug for BlackBoxReflexion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BlackBoxReflexion")
            .field("dim", &self.dim)
            .field("domain_radius", &self.domain_radius)
            .finish()
    }
}

impl BlackBoxReflexion {
    pub fn new(dim: usize, domain_radius: f64, eval: Arc<EvalFn>) -> Self {
        BlackBoxReflexion {
            dim,
            domain_radius,
            eval,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain_radius(&self) -> f64 {
        self.domain_radius
    }

    /// `S_x y`. Rejects arguments on or outside the declared domain.
    pub fn eval(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<DVector<f64>, CoreError> {
        if x.len() != self.dim {
            return Err(CoreError::dim(self.dim, x.len()));
        }
        if y.len() != self.dim {
            return Err(CoreError::dim(self.dim, y.len()));
        }
        if x.norm() >= self.domain_radius || y.norm() >= self.domain_radius {
            return Err(CoreError::OutOfChartDomain(
                "black-box argument outside the declared domain".into(),
            ));
        }
        (self.eval)(x, y)
    }

    /// Samples the two cheap identities `S_x x = x` and `S_x S_x y = y`
    /// before any derivative work; the worst `A2` residual doubles as the
    /// evaluation-noise floor estimate.
    pub fn sanity_check(
        &self,
        seed: u64,
        samples: usize,
        tol: f64,
    ) -> Result<SanityReport, CoreError> {
        let mut sampler = BallSampler::new(seed, self.dim, self.domain_radius / 3.0);
        let mut a1_max: f64 = 0.0;
        let mut a2_max: f64 = 0.0;
        let mut evaluated = 0usize;
        for _ in 0..samples {
            let x = sampler.draw();
            let y = sampler.draw();
            let sxx = match self.eval(&x, &x) {
                Ok(v) => v,
                Err(_) => continue,
            };
            let back = match self.eval(&x, &y).and_then(|sxy| self.eval(&x, &sxy)) {
                Ok(v) => v,
                Err(_) => continue,
            };
            a1_max = a1_max.max((sxx - &x).norm());
            a2_max = a2_max.max((back - &y).norm());
            evaluated += 1;
        }
        if evaluated == 0 {
            return Err(CoreError::InvalidInput(
                "sanity check could not evaluate any sample".into(),
            ));
        }
        if a1_max > tol || a2_max > tol {
            return Err(CoreError::InvalidInput(format!(
                "reflexion fails the axiom gate: A1 residual {a1_max:.3e}, A2 residual {a2_max:.3e}"
            )));
        }
        Ok(SanityReport {
            a1_max,
            a2_max,
            evaluated,
            noise_floor: a2_max.max(1e-15),
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SanityReport {
    pub a1_max: f64,
    pub a2_max: f64,
    pub evaluated: usize,
    /// Empirical evaluation-noise scale, used to calibrate FD thresholds.
    pub noise_floor: f64,
}

/// Jacobian of `y -> S(p, y)` at `y = q`.
pub fn jac_second(
    s: &BlackBoxReflexion,
    p: &DVector<f64>,
    q: &DVector<f64>,
    step: f64,
) -> Result<DMatrix<f64>, CoreError> {
    linalg::try_central_jacobian(|y| s.eval(p, y), q, step, s.dim())
}

/// Jacobian of `w -> S(w, q)` at `w = p`.
pub fn jac_first(
    s: &BlackBoxReflexion,
    p: &DVector<f64>,
    q: &DVector<f64>,
    step: f64,
) -> Result<DMatrix<f64>, CoreError> {
    linalg::try_central_jacobian(|w| s.eval(w, q), p, step, s.dim())
}

/// Both tangent maps of the reflexion at a base point, with their
/// structural residuals.
#[derive(Debug, Clone)]
pub struct TangentData {
    pub base: DVector<f64>,
    /// Derivative in the second slot at the diagonal; squares to `I`.
    pub ts: DMatrix<f64>,
    /// Derivative in the first slot at the diagonal; equals `I - ts`.
    pub ts_up: DMatrix<f64>,
    pub involution_residual: f64,
    pub splitting_residual: f64,
}

/// Expected finite-difference error of one tangent-map identity:
/// truncation plus noise amplification, doubled for the matrix product.
pub fn expected_tangent_fd_error(step: f64, noise_floor: f64) -> f64 {
    2.0 * (step * step / 6.0 + noise_floor / (2.0 * step))
}

/// Computes `TS_x` and `TS^x` by central differences and enforces the two
/// structural identities within `10x` the expected FD error.
pub fn tangent_maps(
    s: &BlackBoxReflexion,
    x: &DVector<f64>,
    step: f64,
    noise_floor: f64,
) -> Result<TangentData, CoreError> {
    if x.norm() + step >= s.domain_radius() {
        return Err(CoreError::DomainTooSmall {
            radius: s.domain_radius(),
            step,
        });
    }
    let ts = jac_second(s, x, x, step)?;
    let ts_up = jac_first(s, x, x, step)?;
    let n = s.dim();
    let ident = DMatrix::<f64>::identity(n, n);
    let involution_residual = linalg::spectral_norm(&(&ts * &ts - &ident));
    let splitting_residual = linalg::spectral_norm(&(&ts + &ts_up - &ident));
    let threshold = 10.0 * expected_tangent_fd_error(step, noise_floor);
    if involution_residual > threshold {
        return Err(CoreError::InvolutionViolated {
            residual: involution_residual,
            threshold,
        });
    }
    Ok(TangentData {
        base: x.clone(),
        ts,
        ts_up,
        involution_residual,
        splitting_residual,
    })
}

/// Splits the tangent space at the base point into the `-1` and `+1`
/// eigenspaces of `TS_x`, returned as orthonormal column bases.
pub fn tangent_split(
    td: &TangentData,
    eigen_tol: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>), CoreError> {
    let n = td.ts.nrows();
    for eig in td.ts.complex_eigenvalues().iter() {
        let to_plus = (eig - nalgebra::Complex::new(1.0, 0.0)).norm();
        let to_minus = (eig + nalgebra::Complex::new(1.0, 0.0)).norm();
        if to_plus.min(to_minus) > eigen_tol {
            return Err(CoreError::EigenvalueAmbiguous {
                value: eig.re,
                tolerance: eigen_tol,
            });
        }
    }
    let ident = DMatrix::<f64>::identity(n, n);
    let p_minus = (&ident - &td.ts) * 0.5;
    let p_plus = (&ident + &td.ts) * 0.5;
    // Projector singular values cluster at 0 and 1, so an absolute 0.5
    // cutoff separates them even when one side is empty.
    let t_minus = projector_range(&p_minus);
    let t_plus = projector_range(&p_plus);
    if t_minus.ncols() + t_plus.ncols() != n {
        return Err(CoreError::EigenvalueAmbiguous {
            value: f64::NAN,
            tolerance: eigen_tol,
        });
    }
    Ok((t_minus, t_plus))
}

fn projector_range(p: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = p.clone().svd(true, false);
    let rank = svd.singular_values.iter().filter(|&&sv| sv > 0.5).count();
    svd.u.expect("SVD with u").columns(0, rank).into_owned()
}

/// A vector field known only through point evaluations.
#[derive(Clone)]
pub struct SampledVectorField {
    label: String,
    dim: usize,
    eval: Arc<FieldFn>,
}

impl std::fmt::Debug for SampledVectorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SampledVectorField")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .finish()
    }
}

impl SampledVectorField {
    pub fn new(label: impl Into<String>, dim: usize, eval: Arc<FieldFn>) -> Self {
        SampledVectorField {
            label: label.into(),
            dim,
            eval,
        }
    }

    pub fn zero(dim: usize) -> Self {
        SampledVectorField::new("0", dim, Arc::new(move |_| Ok(DVector::zeros(dim))))
    }

    pub fn constant(label: impl Into<String>, value: DVector<f64>) -> Self {
        let dim = value.len();
        SampledVectorField::new(label, dim, Arc::new(move |_| Ok(value.clone())))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, y: &DVector<f64>) -> Result<DVector<f64>, CoreError> {
        if y.len() != self.dim {
            return Err(CoreError::dim(self.dim, y.len()));
        }
        (self.eval)(y)
    }

    /// `sum_i coeffs[i] * fields[i]` as a lazily evaluated field.
    pub fn linear_combination(
        label: impl Into<String>,
        coeffs: DVector<f64>,
        fields: Vec<SampledVectorField>,
    ) -> Self {
        assert_eq!(coeffs.len(), fields.len(), "one coefficient per field");
        let dim = fields.first().map_or(0, |f| f.dim);
        SampledVectorField::new(
            label,
            dim,
            Arc::new(move |y| {
                let mut acc = DVector::zeros(dim);
                for (c, f) in coeffs.iter().zip(&fields) {
                    if *c != 0.0 {
                        acc += f.eval(y)? * *c;
                    }
                }
                Ok(acc)
            }),
        )
    }
}

/// The infinitesimal-automorphism candidate attached to a tangent vector:
/// `R_x(v)(y) = 1/2 TS^{S_x y} v`, each evaluation by central differences.
///
/// The superscript derivative moves the reflexion base point along `v`
/// through `x` while the argument stays at `S_x y`, so the first-slot
/// Jacobian is taken at the pair `(x, S_x y)`.
pub fn r_field(
    s: &BlackBoxReflexion,
    x: &DVector<f64>,
    v: &DVector<f64>,
    step: f64,
    label: impl Into<String>,
) -> SampledVectorField {
    let s = s.clone();
    let x = x.clone();
    let v = v.clone();
    let dim = s.dim();
    SampledVectorField::new(
        label,
        dim,
        Arc::new(move |y| {
            let reflected = s.eval(&x, y)?;
            let jac = jac_first(&s, &x, &reflected, step)?;
            Ok(jac * &v * 0.5)
        }),
    )
}

/// Pullback of a field by the reflexion at `x`:
/// `((S_x)^* F)(y) = TS_x|_{S_x y} F(S_x y)`.
pub fn reflexion_pullback(
    s: &BlackBoxReflexion,
    x: &DVector<f64>,
    field: &SampledVectorField,
    step: f64,
) -> SampledVectorField {
    let s = s.clone();
    let x = x.clone();
    let field = field.clone();
    let dim = field.dim();
    SampledVectorField::new(
        format!("(S_x)*{}", field.label()),
        dim,
        Arc::new(move |y| {
            let reflected = s.eval(&x, y)?;
            let jac = jac_second(&s, &x, &reflected, step)?;
            Ok(jac * field.eval(&reflected)?)
        }),
    )
}

/// Max residual of `||((S_x)^* F)(y) + F(y)||` over the probes: zero for
/// fields of odd reflexion parity.
pub fn parity_residual(
    s: &BlackBoxReflexion,
    x: &DVector<f64>,
    field: &SampledVectorField,
    probes: &[DVector<f64>],
    step: f64,
) -> Result<f64, CoreError> {
    let pulled = reflexion_pullback(s, x, field, step);
    let mut worst: f64 = 0.0;
    for y in probes {
        let residual = (pulled.eval(y)? + field.eval(y)?).norm();
        worst = worst.max(residual);
    }
    Ok(worst)
}

/// Residual of the infinitesimal-automorphism identity
/// `F(S_p q) = TS_p F(q) + TS^q F(p)` over sampled pairs.
#[derive(Debug, Clone, Serialize)]
pub struct MembershipReport {
    pub max_residual: f64,
    pub evaluated: usize,
    pub skipped: usize,
    pub skip_rate: f64,
}

pub fn infinitesimal_automorphism_residual(
    s: &BlackBoxReflexion,
    field: &SampledVectorField,
    pairs: &[(DVector<f64>, DVector<f64>)],
    step: f64,
) -> MembershipReport {
    let mut max_residual: f64 = 0.0;
    let mut evaluated = 0usize;
    let mut skipped = 0usize;
    for (p, q) in pairs {
        let result = (|| -> Result<f64, CoreError> {
            let spq = s.eval(p, q)?;
            let lhs = field.eval(&spq)?;
            let ts_p = jac_second(s, p, q, step)?;
            let ts_up_q = jac_first(s, p, q, step)?;
            let rhs = ts_p * field.eval(q)? + ts_up_q * field.eval(p)?;
            Ok((lhs - rhs).norm())
        })();
        match result {
            Ok(r) => {
                evaluated += 1;
                max_residual = max_residual.max(r);
            }
            Err(_) => skipped += 1,
        }
    }
    MembershipReport {
        max_residual,
        evaluated,
        skipped,
        skip_rate: skipped as f64 / pairs.len().max(1) as f64,
    }
}

/// `[F, G](y) = DG(y) F(y) - DF(y) G(y)` with central-difference Jacobians.
pub fn field_bracket(
    f: &SampledVectorField,
    g: &SampledVectorField,
    y: &DVector<f64>,
    step: f64,
) -> Result<DVector<f64>, CoreError> {
    let df = linalg::try_central_jacobian(|p| f.eval(p), y, step, f.dim())?;
    let dg = linalg::try_central_jacobian(|p| g.eval(p), y, step, g.dim())?;
    Ok(dg * f.eval(y)? - df * g.eval(y)?)
}

/// The bracket as a lazily evaluated field.
pub fn bracket_field(
    f: &SampledVectorField,
    g: &SampledVectorField,
    step: f64,
) -> SampledVectorField {
    let f = f.clone();
    let g = g.clone();
    let dim = f.dim();
    let label = format!("[{},{}]", f.label(), g.label());
    SampledVectorField::new(
        label,
        dim,
        Arc::new(move |y| field_bracket(&f, &g, y, step)),
    )
}

/// Tuning for [`reconstruct_algebra`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ReconstructionConfig {
    /// Central-difference step for Jacobians of the reflexion itself.
    pub fd_step: f64,
    /// Central-difference step for Jacobians of sampled fields.
    pub field_fd_step: f64,
    /// Cloud size is `cloud_per_dim * chart_dim`.
    pub cloud_per_dim: usize,
    /// Cloud radius as a fraction of the domain radius.
    pub cloud_radius_factor: f64,
    /// Number of cloud points used for the structure-constant fit.
    pub fit_points: usize,
    /// Relative singular-value cutoff for the span rank of field evaluations.
    pub rank_rel_tol: f64,
    /// Relative rank cutoff when fingerprinting the fitted constants, which
    /// carry finite-difference noise.
    pub fingerprint_rank_tol: f64,
    /// Tolerance of the A1/A2 sanity gate.
    pub sanity_tol: f64,
    pub sanity_samples: usize,
    pub eigen_tol: f64,
    pub seed: u64,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        ReconstructionConfig {
            fd_step: 1e-5,
            field_fd_step: 1e-4,
            cloud_per_dim: 50,
            cloud_radius_factor: 1.0 / 3.0,
            fit_points: 30,
            rank_rel_tol: 1e-6,
            fingerprint_rank_tol: 1e-3,
            sanity_tol: 1e-6,
            sanity_samples: 20,
            eigen_tol: 0.1,
            seed: 42,
        }
    }
}

/// Everything recovered from the black box.
#[derive(Debug, Clone, Serialize)]
pub struct ReconstructionReport {
    pub chart_dim: usize,
    pub t_minus_dim: usize,
    pub t_plus_dim: usize,
    pub gx_dim: usize,
    pub transitive: bool,
    /// Fitted structure constants in the orthonormalized field basis.
    pub structure_constants: Vec<Vec<Vec<f64>>>,
    pub fingerprint: Fingerprint,
    pub residuals: BTreeMap<String, f64>,
    pub field_labels: Vec<String>,
    pub config: ReconstructionConfig,
}

/// Recovers the transvection algebra at `x`: builds the `R`-fields of a
/// `T-` basis, adjoins their first-level brackets, ranks the span of the
/// stacked cloud evaluations, fits structure constants, and tests whether
/// the recovered fields span the full tangent space at `x`.
pub fn reconstruct_algebra(
    s: &BlackBoxReflexion,
    x: &DVector<f64>,
    config: &ReconstructionConfig,
) -> Result<ReconstructionReport, CoreError> {
    let n = s.dim();
    let mut residuals = BTreeMap::new();

    let sanity = s.sanity_check(config.seed, config.sanity_samples, config.sanity_tol)?;
    residuals.insert("sanity_a1_max".into(), sanity.a1_max);
    residuals.insert("sanity_a2_max".into(), sanity.a2_max);
    residuals.insert("eval_noise_floor".into(), sanity.noise_floor);

    let noise_floor = sanity.noise_floor.max(1e-12);
    let td = tangent_maps(s, x, config.fd_step, noise_floor)?;
    residuals.insert("ts_involution".into(), td.involution_residual);
    residuals.insert("ts_splitting".into(), td.splitting_residual);
    let (t_minus, t_plus) = tangent_split(&td, config.eigen_tol)?;
    let m = t_minus.ncols();

    if m == 0 {
        return Ok(ReconstructionReport {
            chart_dim: n,
            t_minus_dim: 0,
            t_plus_dim: t_plus.ncols(),
            gx_dim: 0,
            transitive: n == 0,
            structure_constants: Vec::new(),
            fingerprint: empty_fingerprint(),
            residuals,
            field_labels: Vec::new(),
            config: *config,
        });
    }

    // Generating fields: R_x of a T- basis plus their first-level brackets.
    let mut fields: Vec<SampledVectorField> = (0..m)
        .map(|i| {
            r_field(
                s,
                x,
                &t_minus.column(i).into_owned(),
                config.fd_step,
                format!("R_x(e{})", i + 1),
            )
        })
        .collect();
    let r_fields = fields.clone();
    for i in 0..m {
        for j in (i + 1)..m {
            fields.push(bracket_field(
                &fields[i].clone(),
                &fields[j].clone(),
                config.field_fd_step,
            ));
        }
    }
    let field_labels: Vec<String> = fields.iter().map(|f| f.label().to_string()).collect();
    let total = fields.len();

    // Evaluate every field on a common sample cloud.
    let cloud_size = config.cloud_per_dim * n;
    let cloud_radius = s.domain_radius() * config.cloud_radius_factor;
    let mut sampler = BallSampler::new(config.seed.wrapping_add(1), n, cloud_radius);
    let mut cloud = Vec::with_capacity(cloud_size);
    let mut evaluations: Vec<Vec<DVector<f64>>> = vec![Vec::new(); total];
    let mut attempts = 0usize;
    while cloud.len() < cloud_size && attempts < 4 * cloud_size {
        attempts += 1;
        let y = sampler.draw();
        let values: Result<Vec<DVector<f64>>, CoreError> =
            fields.iter().map(|f| f.eval(&y)).collect();
        match values {
            Ok(vals) => {
                for (store, v) in evaluations.iter_mut().zip(vals) {
                    store.push(v);
                }
                cloud.push(y);
            }
            Err(_) => continue,
        }
    }
    if cloud.len() < cloud_size {
        return Err(CoreError::DomainTooSmall {
            radius: s.domain_radius(),
            step: config.fd_step,
        });
    }

    // Stacked evaluation matrix: one row per field.
    let cols = cloud.len() * n;
    let mut eval_matrix = DMatrix::zeros(total, cols);
    for (f, values) in evaluations.iter().enumerate() {
        for (p, v) in values.iter().enumerate() {
            for k in 0..n {
                eval_matrix[(f, p * n + k)] = v[k];
            }
        }
    }
    let mut normalized = eval_matrix.clone();
    for f in 0..total {
        let norm = eval_matrix.row(f).norm();
        if norm > 0.0 {
            let scaled = eval_matrix.row(f) / norm;
            normalized.set_row(f, &scaled);
        }
    }

    let gx_dim = numerical_rank_stable(&normalized, config.rank_rel_tol)?;
    residuals.insert(
        "evaluation_sigma_max".into(),
        linalg::spectral_norm(&normalized),
    );

    // Transitivity: do the recovered fields span T_x M at x itself?
    // Bracket rows carry FD noise of their own scale, so singular values are
    // compared against a noise-aware floor rather than the span cutoff.
    let field_noise = noise_floor / (2.0 * config.fd_step) + config.fd_step * config.fd_step;
    let bracket_noise =
        field_noise / config.field_fd_step + config.field_fd_step * config.field_fd_step;
    let mut at_x = DMatrix::zeros(total, n);
    for (f, field) in fields.iter().enumerate() {
        let v = field.eval(x)?;
        at_x.set_row(f, &v.transpose());
    }
    let sv_at_x = at_x.clone().singular_values();
    let transitive_cut = (50.0 * bracket_noise).max(config.rank_rel_tol * sv_at_x.max());
    let span_at_x = sv_at_x.iter().filter(|&&sv| sv > transitive_cut).count();
    let transitive = span_at_x == n;
    residuals.insert("transitivity_cutoff".into(), transitive_cut);
    residuals.insert(
        "transitivity_sigma_min_kept".into(),
        sv_at_x
            .iter()
            .copied()
            .filter(|&sv| sv > transitive_cut)
            .fold(f64::INFINITY, f64::min),
    );

    // Orthonormal basis of the recovered span, as combinations of the raw
    // generating fields.
    let svd = eval_matrix.clone().svd(true, true);
    let u = svd.u.as_ref().expect("SVD with u");
    let combo = |k: usize| -> DVector<f64> {
        let mut c = DVector::zeros(total);
        for f in 0..total {
            c[f] = u[(f, k)] / svd.singular_values[k];
        }
        c
    };
    let basis_fields: Vec<SampledVectorField> = (0..gx_dim)
        .map(|k| {
            SampledVectorField::linear_combination(format!("G{}", k + 1), combo(k), fields.clone())
        })
        .collect();
    // Their stacked cloud evaluations are the orthonormal rows of V^T.
    let v_t = svd.v_t.as_ref().expect("SVD with v_t");
    let basis_rows: Vec<DVector<f64>> = (0..gx_dim).map(|k| v_t.row(k).transpose()).collect();

    // Fit structure constants on a reduced cloud.
    let fit_count = config.fit_points.min(cloud.len()).max(1);
    let mut constants = vec![vec![vec![0.0; gx_dim]; gx_dim]; gx_dim];
    let mut fit_residual_max: f64 = 0.0;
    if gx_dim > 1 {
        // Basis-field evaluations restricted to the fit cloud.
        let mut basis_eval = DMatrix::zeros(gx_dim, fit_count * n);
        for (k, row) in basis_rows.iter().enumerate() {
            for idx in 0..fit_count * n {
                basis_eval[(k, idx)] = row[idx];
            }
        }
        let gram = &basis_eval * basis_eval.transpose();
        let gram_inv = gram
            .clone()
            .try_inverse()
            .ok_or_else(|| CoreError::InvalidInput("degenerate basis gram matrix".into()))?;

        for i in 0..gx_dim {
            for j in (i + 1)..gx_dim {
                let bracket_ij =
                    bracket_field(&basis_fields[i], &basis_fields[j], config.field_fd_step);
                let mut target = DVector::zeros(fit_count * n);
                for (p, y) in cloud.iter().take(fit_count).enumerate() {
                    let v = bracket_ij.eval(y)?;
                    for k in 0..n {
                        target[p * n + k] = v[k];
                    }
                }
                let coeffs = &gram_inv * (&basis_eval * &target);
                let reconstructed = basis_eval.transpose() * &coeffs;
                let rel = (&reconstructed - &target).norm() / target.norm().max(1e-12);
                fit_residual_max = fit_residual_max.max(rel);
                for k in 0..gx_dim {
                    constants[i][j][k] = coeffs[k];
                    constants[j][i][k] = -coeffs[k];
                }
            }
        }
    }
    residuals.insert("fit_max_rel_residual".into(), fit_residual_max);

    let fingerprint = if gx_dim == 0 {
        empty_fingerprint()
    } else {
        LieAlgebraSpec::new(gx_dim, constants.clone(), None, None)?
            .fingerprint(config.fingerprint_rank_tol)
    };

    // Reproducing property: R_x(v)(x) is the T- projection of v.
    let projector = &t_minus * t_minus.transpose();
    let mut reproducing: f64 = 0.0;
    for (i, f) in r_fields.iter().enumerate() {
        let expected = &projector * t_minus.column(i).into_owned();
        reproducing = reproducing.max((f.eval(x)? - expected).norm());
    }
    residuals.insert("r_field_reproducing".into(), reproducing);

    Ok(ReconstructionReport {
        chart_dim: n,
        t_minus_dim: m,
        t_plus_dim: t_plus.ncols(),
        gx_dim,
        transitive,
        structure_constants: constants,
        fingerprint,
        residuals,
        field_labels,
        config: *config,
    })
}

fn empty_fingerprint() -> Fingerprint {
    Fingerprint {
        dim: 0,
        derived_series: vec![0],
        lower_central_series: vec![0],
        center_dim: 0,
        killing_signature: (0, 0),
    }
}

/// Rank with a stability check: the decision must survive a ten-fold
/// loosening and tightening of the cutoff.
fn numerical_rank_stable(mat: &DMatrix<f64>, rel_tol: f64) -> Result<usize, CoreError> {
    let rank = linalg::numerical_rank(mat, rel_tol);
    let loose = linalg::numerical_rank(mat, rel_tol * 10.0);
    let tight = linalg::numerical_rank(mat, rel_tol / 10.0);
    if loose != rank || tight != rank {
        return Err(CoreError::RankUnstable {
            rank_low: loose,
            rank_high: tight,
        });
    }
    Ok(rank)
}

/// Fingerprint comparison: equality is necessary but not sufficient for the
/// algebras to be isomorphic, and the report says so.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub fingerprint_match: bool,
    pub mismatches: Vec<String>,
    pub fitted: Fingerprint,
    pub reference: Fingerprint,
    /// Matching fingerprints do not prove isomorphism; a mismatch disproves it.
    pub match_is_necessary_not_sufficient: bool,
}

pub fn compare_algebras(
    fitted: &Fingerprint,
    reference: &LieAlgebraSpec,
    reference_rank_tol: f64,
) -> ComparisonReport {
    let reference_fp = reference.fingerprint(reference_rank_tol);
    let mut mismatches = Vec::new();
    if fitted.dim != reference_fp.dim {
        mismatches.push(format!("dim: {} vs {}", fitted.dim, reference_fp.dim));
    }
    if fitted.derived_series != reference_fp.derived_series {
        mismatches.push(format!(
            "derived series: {:?} vs {:?}",
            fitted.derived_series, reference_fp.derived_series
        ));
    }
    if fitted.lower_central_series != reference_fp.lower_central_series {
        mismatches.push(format!(
            "lower central series: {:?} vs {:?}",
            fitted.lower_central_series, reference_fp.lower_central_series
        ));
    }
    if fitted.center_dim != reference_fp.center_dim {
        mismatches.push(format!(
            "center dim: {} vs {}",
            fitted.center_dim, reference_fp.center_dim
        ));
    }
    if fitted.killing_signature != reference_fp.killing_signature {
        mismatches.push(format!(
            "killing signature: {:?} vs {:?}",
            fitted.killing_signature, reference_fp.killing_signature
        ));
    }
    ComparisonReport {
        fingerprint_match: mismatches.is_empty(),
        mismatches,
        fitted: fitted.clone(),
        reference: reference_fp,
        match_is_necessary_not_sufficient: true,
    }
}

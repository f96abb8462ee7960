//! The homogeneous local reflexion space on a chart of `G/K`.
//!
//! Given a matrix Lie algebra `g`, an involutive automorphism `sigma = Ad(h)`
//! and an isotropy subalgebra `k` fixed by `sigma`, the reflexion at the
//! coset `fK` acts on cosets by `S_{fK} gK = f h f^{-1} g K`. The chart sends
//! `x` in a ball of `R^(dim g - dim k)` to the coset `exp(sum x_i m_i) K`,
//! where `m` is the `-1` eigenspace of `sigma` extended by the orthogonal
//! complement of `k` inside the fixed space. Everything is evaluated near
//! the identity coset by right-multiplying with `h`, which keeps all matrix
//! products inside the Newton basin of the chart normalization.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::CoreError;
use crate::lie::{mat_exp, GroupElement, LieAlgebraSpec};
use crate::linalg;
use crate::reconstruction::BlackBoxReflexion;
use crate::sampling::{map_samples, BallSampler};
use crate::symmetric::{eigensplit, Involution, SymmetricDecomposition};

/// Chart coordinates of a coset, valid while `||coords|| < trust_radius`.
pub type ChartPoint = DVector<f64>;

/// Numerical knobs for the chart machinery.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChartConfig {
    /// Convergence threshold on the Newton residual of the normalization.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Central-difference step for the Newton differential.
    pub newton_fd_step: f64,
    /// Hard bound on `||g - I||_2` accepted by the normalization.
    pub matrix_radius: f64,
    /// Bound on the Newton iterate `||(x, z)||` before the chart is declared
    /// left.
    pub coordinate_bound: f64,
    /// Central-difference step for the chart derivative of the
    /// right-invariant field.
    pub field_fd_step: f64,
    pub algebra_tol: f64,
    pub rank_tol: f64,
}

impl Default for ChartConfig {
    fn default() -> Self {
        ChartConfig {
            newton_tol: 1e-12,
            newton_max_iter: 50,
            newton_fd_step: 1e-6,
            matrix_radius: 1.5,
            coordinate_bound: 2.0,
            field_fd_step: 1e-6,
            algebra_tol: 1e-9,
            rank_tol: 1e-8,
        }
    }
}

/// Construction-time invariant residuals of a model.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ModelResiduals {
    /// `||h^2 - I||`.
    pub h_involution: f64,
    /// `||Ad(h) - sigma||`, or `NaN` when conjugation by `h` leaves the
    /// algebra span entirely.
    pub adjoint_consistency: f64,
}

/// The chart-based realization of the reflexion space on `G/K`.
#[derive(Debug, Clone)]
pub struct HomogeneousReflexionModel {
    spec: LieAlgebraSpec,
    sigma: DMatrix<f64>,
    decomposition: SymmetricDecomposition,
    h: GroupElement,
    /// Columns: chart directions in algebra coordinates (`g-` first).
    m_basis: DMatrix<f64>,
    trust_radius: f64,
    config: ChartConfig,
    residuals: ModelResiduals,
}

impl HomogeneousReflexionModel {
    /// Builds and validates a model: `h^2 = I` and `Ad(h) = sigma` must hold
    /// to the algebra tolerance.
    pub fn new(
        spec: LieAlgebraSpec,
        involution: &Involution,
        k_basis: &[DVector<f64>],
        h: GroupElement,
        trust_radius: f64,
        config: ChartConfig,
    ) -> Result<Self, CoreError> {
        let model = Self::new_unchecked(spec, involution, k_basis, h, trust_radius, config)?;
        if model.residuals.h_involution > config.algebra_tol {
            return Err(CoreError::NotInvolutive {
                residual: model.residuals.h_involution,
            });
        }
        let adjoint = model.residuals.adjoint_consistency;
        if adjoint.is_nan() || adjoint > config.algebra_tol {
            return Err(CoreError::NotAutomorphism { residual: adjoint });
        }
        Ok(model)
    }

    /// Builds a model without enforcing the `h` invariants; the residuals
    /// are still recorded. Negative controls (deliberately corrupted `h`)
    /// go through here so that the axiom checks can expose them.
    pub fn new_unchecked(
        spec: LieAlgebraSpec,
        involution: &Involution,
        k_basis: &[DVector<f64>],
        h: GroupElement,
        trust_radius: f64,
        config: ChartConfig,
    ) -> Result<Self, CoreError> {
        let m_size = spec
            .matrix_size()
            .ok_or_else(|| CoreError::InvalidInput("model requires a matrix basis".into()))?;
        if h.size() != m_size {
            return Err(CoreError::dim(m_size, h.size()));
        }
        if !trust_radius.is_finite() || trust_radius <= 0.0 {
            return Err(CoreError::InvalidInput(
                "trust radius must be positive".into(),
            ));
        }
        let decomposition = eigensplit(&spec, involution, k_basis, config.algebra_tol)?;

        let n = spec.dim();
        let k = decomposition.k();
        // Chart complement: g- directions first, then the orthogonal
        // complement of k inside g+.
        let projector = DMatrix::<f64>::identity(n, n) - k * k.transpose();
        let plus_complement =
            linalg::orthonormal_column_span(&(&projector * decomposition.gplus()), config.rank_tol);
        let nm = decomposition.gminus().ncols() + plus_complement.ncols();
        if nm + k.ncols() != n {
            return Err(CoreError::InvalidInput(
                "isotropy does not complement the chart directions".into(),
            ));
        }
        let mut m_basis = DMatrix::zeros(n, nm);
        m_basis
            .view_mut((0, 0), (n, decomposition.gminus().ncols()))
            .copy_from(decomposition.gminus());
        m_basis
            .view_mut(
                (0, decomposition.gminus().ncols()),
                (n, plus_complement.ncols()),
            )
            .copy_from(&plus_complement);

        let ident = DMatrix::<f64>::identity(m_size, m_size);
        let h_involution = (h.matrix() * h.matrix() - ident).norm();
        let adjoint_consistency = match spec.adjoint(&h, 1.0) {
            Ok(ad_h) => (&ad_h - involution.sigma()).norm(),
            Err(_) => f64::NAN,
        };

        Ok(HomogeneousReflexionModel {
            sigma: involution.sigma().clone(),
            decomposition,
            h,
            m_basis,
            trust_radius,
            config,
            residuals: ModelResiduals {
                h_involution,
                adjoint_consistency,
            },
            spec,
        })
    }

    pub fn spec(&self) -> &LieAlgebraSpec {
        &self.spec
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn decomposition(&self) -> &SymmetricDecomposition {
        &self.decomposition
    }

    pub fn h(&self) -> &GroupElement {
        &self.h
    }

    pub fn trust_radius(&self) -> f64 {
        self.trust_radius
    }

    pub fn config(&self) -> &ChartConfig {
        &self.config
    }

    pub fn residuals(&self) -> ModelResiduals {
        self.residuals
    }

    /// Dimension of the chart, `dim g - dim k`.
    pub fn chart_dim(&self) -> usize {
        self.m_basis.ncols()
    }

    /// Number of leading chart coordinates that point along `g-`.
    pub fn gminus_dim(&self) -> usize {
        self.decomposition.gminus().ncols()
    }

    /// Chart directions as algebra coordinates (columns).
    pub fn m_basis(&self) -> &DMatrix<f64> {
        &self.m_basis
    }

    /// Algebra coordinates of a chart point.
    pub fn chart_to_algebra(&self, x: &ChartPoint) -> DVector<f64> {
        &self.m_basis * x
    }

    /// `exp` of the chart representative as a matrix.
    pub fn chart_representative(&self, x: &ChartPoint) -> Result<DMatrix<f64>, CoreError> {
        if x.len() != self.chart_dim() {
            return Err(CoreError::dim(self.chart_dim(), x.len()));
        }
        let alg = self.chart_to_algebra(x);
        Ok(mat_exp(&self.spec.vector_to_matrix(&alg)?))
    }

    fn ensure_inside_trust(&self, x: &ChartPoint) -> Result<(), CoreError> {
        if x.len() != self.chart_dim() {
            return Err(CoreError::dim(self.chart_dim(), x.len()));
        }
        if x.norm() >= self.trust_radius {
            return Err(CoreError::OutOfChartDomain(format!(
                "point norm {:.4} reaches the trust radius {}",
                x.norm(),
                self.trust_radius
            )));
        }
        Ok(())
    }

    /// Splits a group element near the identity as
    /// `g = exp(X) exp(Z), X in span(m), Z in k`, by Newton iteration on the
    /// joint coordinates; returns the chart and isotropy coordinates.
    pub fn coset_normalize(
        &self,
        g: &DMatrix<f64>,
    ) -> Result<(DVector<f64>, DVector<f64>), CoreError> {
        let m_size = self.spec.matrix_size().expect("validated at construction");
        if g.nrows() != m_size || g.ncols() != m_size {
            return Err(CoreError::dim(m_size, g.nrows()));
        }
        let ident = DMatrix::<f64>::identity(m_size, m_size);
        let dist = linalg::spectral_norm(&(g - &ident));
        if dist > self.config.matrix_radius {
            return Err(CoreError::OutOfChartDomain(format!(
                "||g - I|| = {dist:.4} exceeds the chart matrix radius {}",
                self.config.matrix_radius
            )));
        }

        let nm = self.chart_dim();
        let nk = self.decomposition.k().ncols();
        let target = DVector::<f64>::from_column_slice(g.as_slice());
        let assemble = |u: &DVector<f64>| -> DVector<f64> {
            let x = u.rows(0, nm).into_owned();
            let z = u.rows(nm, nk).into_owned();
            let xm = self
                .spec
                .vector_to_matrix(&(&self.m_basis * x))
                .expect("dims agree");
            let zm = self
                .spec
                .vector_to_matrix(&(self.decomposition.k() * z))
                .expect("dims agree");
            let product = mat_exp(&xm) * mat_exp(&zm);
            DVector::from_column_slice(product.as_slice())
        };

        let mut u = DVector::zeros(nm + nk);
        let mut residual = assemble(&u) - &target;
        for _ in 0..self.config.newton_max_iter {
            if residual.norm() <= self.config.newton_tol {
                let x = u.rows(0, nm).into_owned();
                let z = u.rows(nm, nk).into_owned();
                return Ok((x, z));
            }
            let jac =
                linalg::central_jacobian(assemble, &u, self.config.newton_fd_step, m_size * m_size);
            let step = linalg::lstsq(&jac, &(-&residual), 1e-13);
            u += step;
            if u.norm() > self.config.coordinate_bound {
                return Err(CoreError::OutOfChartDomain(format!(
                    "normalization iterate left the chart (||u|| = {:.3})",
                    u.norm()
                )));
            }
            residual = assemble(&u) - &target;
        }
        Err(CoreError::OutOfChartDomain(format!(
            "normalization did not converge in {} iterations (residual {:.3e})",
            self.config.newton_max_iter,
            residual.norm()
        )))
    }

    /// Chart coordinates of the coset of `g`, discarding the isotropy part.
    pub fn chart_of_group(&self, g: &DMatrix<f64>) -> Result<ChartPoint, CoreError> {
        Ok(self.coset_normalize(g)?.0)
    }

    /// The reflexion `S_x y` in chart coordinates.
    ///
    /// Computed as the coset of `exp(X) h exp(-X) g h` with `g = exp(Y)`:
    /// the trailing `h` lies in the isotropy group, so it does not change
    /// the coset, and it brings the representative back near the identity.
    pub fn reflexion(&self, x: &ChartPoint, y: &ChartPoint) -> Result<ChartPoint, CoreError> {
        self.ensure_inside_trust(y)?;
        let g_y = self.chart_representative(y)?;
        self.reflexion_of_representative(x, &g_y)
    }

    /// The reflexion applied to an arbitrary coset representative `g`.
    pub fn reflexion_of_representative(
        &self,
        x: &ChartPoint,
        g: &DMatrix<f64>,
    ) -> Result<ChartPoint, CoreError> {
        self.ensure_inside_trust(x)?;
        let x_alg = self.chart_to_algebra(x);
        let x_mat = self.spec.vector_to_matrix(&x_alg)?;
        let f = mat_exp(&x_mat);
        let f_inv = mat_exp(&(-x_mat));
        let rep = &f * self.h.matrix() * f_inv * g * self.h.matrix();
        self.chart_of_group(&rep)
    }

    /// `S_x (S_0 y)`, the double reflexion through `x` and the base point.
    pub fn double_reflexion(
        &self,
        x: &ChartPoint,
        y: &ChartPoint,
    ) -> Result<ChartPoint, CoreError> {
        let zero = DVector::zeros(self.chart_dim());
        let through_base = self.reflexion(&zero, y)?;
        self.reflexion(x, &through_base)
    }

    /// Chart coordinates of `g_left * exp(Y) K` — the translation oracle used
    /// to cross-check the double-reflexion identity.
    pub fn translation_chart(
        &self,
        g_left: &DMatrix<f64>,
        y: &ChartPoint,
    ) -> Result<ChartPoint, CoreError> {
        let g_y = self.chart_representative(y)?;
        self.chart_of_group(&(g_left * g_y))
    }

    /// The projected right-invariant field of the algebra vector `v` at the
    /// chart point `y`: the chart derivative of `t -> exp(t v) exp(Y) K`.
    pub fn right_invariant_field(
        &self,
        v: &DVector<f64>,
        y: &ChartPoint,
    ) -> Result<DVector<f64>, CoreError> {
        if v.len() != self.spec.dim() {
            return Err(CoreError::dim(self.spec.dim(), v.len()));
        }
        self.ensure_inside_trust(y)?;
        let g_y = self.chart_representative(y)?;
        let v_mat = self.spec.vector_to_matrix(v)?;
        let h = self.config.field_fd_step;
        let plus = self.chart_of_group(&(mat_exp(&(&v_mat * h)) * &g_y))?;
        let minus = self.chart_of_group(&(mat_exp(&(&v_mat * -h)) * &g_y))?;
        Ok((plus - minus) / (2.0 * h))
    }

    /// Wraps the reflexion as an opaque evaluator for reconstruction.
    pub fn as_black_box(&self) -> BlackBoxReflexion {
        let model = self.clone();
        BlackBoxReflexion::new(
            self.chart_dim(),
            self.trust_radius,
            Arc::new(move |x: &DVector<f64>, y: &DVector<f64>| model.reflexion(x, y)),
        )
    }

    /// Samples the trust region and reports the worst residual of each
    /// reflexion-space axiom.
    pub fn verify_axioms(&self, config: &AxiomSampleConfig) -> AxiomReport {
        let n = self.chart_dim();
        let radius = self.trust_radius / 3.0;
        let mut sampler = BallSampler::new(config.seed, n, radius);
        let triples: Vec<(DVector<f64>, DVector<f64>, DVector<f64>)> = (0..config.samples)
            .map(|_| (sampler.draw(), sampler.draw(), sampler.draw()))
            .collect();

        #[derive(Default)]
        struct Outcome {
            a1: Option<f64>,
            a2: Option<f64>,
            a3: Option<f64>,
            skips: usize,
        }

        let outcomes = map_samples(&triples, |(x, y, z)| {
            let mut out = Outcome::default();
            match self.reflexion(x, x) {
                Ok(sxx) => out.a1 = Some((sxx - x).norm()),
                Err(_) => out.skips += 1,
            }
            match self.reflexion(x, y).and_then(|sxy| self.reflexion(x, &sxy)) {
                Ok(back) => out.a2 = Some((back - y).norm()),
                Err(_) => out.skips += 1,
            }
            let a3 = (|| -> Result<f64, CoreError> {
                let syz = self.reflexion(y, z)?;
                let lhs = self.reflexion(x, &syz)?;
                let sxy = self.reflexion(x, y)?;
                let sxz = self.reflexion(x, z)?;
                let rhs = self.reflexion(&sxy, &sxz)?;
                Ok((lhs - rhs).norm())
            })();
            match a3 {
                Ok(r) => out.a3 = Some(r),
                Err(_) => out.skips += 1,
            }
            out
        });

        let fold = |pick: fn(&Outcome) -> Option<f64>| -> (Option<f64>, usize) {
            let mut max: Option<f64> = None;
            let mut evaluated = 0;
            for o in &outcomes {
                if let Some(r) = pick(o) {
                    evaluated += 1;
                    max = Some(max.map_or(r, |m: f64| m.max(r)));
                }
            }
            (max, evaluated)
        };
        let (a1_max, a1_count) = fold(|o| o.a1);
        let (a2_max, a2_count) = fold(|o| o.a2);
        let (a3_max, a3_count) = fold(|o| o.a3);
        let skipped: usize = outcomes.iter().map(|o| o.skips).sum();
        let attempts = 3 * config.samples;
        let below = |m: Option<f64>| m.is_some_and(|r| r <= config.tolerance);

        AxiomReport {
            samples: config.samples,
            seed: config.seed,
            sample_radius: radius,
            tolerance: config.tolerance,
            a1_max_residual: a1_max,
            a2_max_residual: a2_max,
            a3_max_residual: a3_max,
            a1_evaluated: a1_count,
            a2_evaluated: a2_count,
            a3_evaluated: a3_count,
            skipped,
            skip_rate: skipped as f64 / attempts as f64,
            a1_pass: below(a1_max),
            a2_pass: below(a2_max),
            a3_pass: below(a3_max),
            model_residuals: self.residuals,
        }
    }
}

/// Sampling parameters for [`HomogeneousReflexionModel::verify_axioms`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AxiomSampleConfig {
    pub samples: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for AxiomSampleConfig {
    fn default() -> Self {
        AxiomSampleConfig {
            samples: 1000,
            seed: 42,
            tolerance: 1e-9,
        }
    }
}

/// Worst-case residuals of the axioms over the sampled trust region.
#[derive(Debug, Clone, Serialize)]
pub struct AxiomReport {
    pub samples: usize,
    pub seed: u64,
    pub sample_radius: f64,
    pub tolerance: f64,
    pub a1_max_residual: Option<f64>,
    pub a2_max_residual: Option<f64>,
    pub a3_max_residual: Option<f64>,
    pub a1_evaluated: usize,
    pub a2_evaluated: usize,
    pub a3_evaluated: usize,
    pub skipped: usize,
    pub skip_rate: f64,
    pub a1_pass: bool,
    pub a2_pass: bool,
    pub a3_pass: bool,
    pub model_residuals: ModelResiduals,
}

impl AxiomReport {
    pub fn all_pass(&self) -> bool {
        self.a1_pass && self.a2_pass && self.a3_pass
    }
}

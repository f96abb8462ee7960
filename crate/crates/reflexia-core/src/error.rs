//! Error type shared by all modules.

use thiserror::Error;

/// Errors raised by the numerical operations.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("group element left the chart domain: {0}")]
    OutOfChartDomain(String),

    #[error("conjugation leaves the span of the algebra basis (residual {residual:.3e})")]
    NotAdInvariant { residual: f64 },

    #[error("map is not involutive: ||sigma^2 - I|| = {residual:.3e}")]
    NotInvolutive { residual: f64 },

    #[error("map is not an algebra automorphism: bracket residual {residual:.3e}")]
    NotAutomorphism { residual: f64 },

    #[error("domain radius {radius} too small for finite-difference step {step}")]
    DomainTooSmall { radius: f64, step: f64 },

    #[error("tangent reflexion is not involutive: ||TS_x^2 - I|| = {residual:.3e} exceeds {threshold:.3e}")]
    InvolutionViolated { residual: f64, threshold: f64 },

    #[error("tangent-map eigenvalue {value} is farther than {tolerance} from both +1 and -1")]
    EigenvalueAmbiguous { value: f64, tolerance: f64 },

    #[error(
        "numerical rank changes from {rank_low} to {rank_high} under a 10x tolerance perturbation"
    )]
    RankUnstable { rank_low: usize, rank_high: usize },

    #[error("trajectory left the trust region after {completed} of {requested} steps")]
    LeftDomain {
        completed: usize,
        requested: usize,
        partial: Box<crate::flows::FlowTrajectory>,
    },

    #[error(
        "field fails the reflexion-parity gate: residual {residual:.3e} exceeds {tolerance:.3e}"
    )]
    ParityViolated { residual: f64, tolerance: f64 },

    #[error("sample skip rate {rate:.2} exceeds the allowed {limit:.2}")]
    SkipRateExceeded { rate: f64, limit: f64 },

    #[error("{context}: no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        context: String,
        iterations: usize,
        residual: f64,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl CoreError {
    pub(crate) fn dim(expected: usize, got: usize) -> Self {
        CoreError::DimensionMismatch { expected, got }
    }
}

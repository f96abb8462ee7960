//! Run configuration and input file loading.
//!
//! All paths inside a config file are resolved relative to the directory
//! containing the config file itself, so fixture bundles stay relocatable.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use reflexia_core::lie::{matrix_from_rows, GroupElement, LieAlgebraSpec};
use reflexia_core::symmetric::Involution;

/// Tolerances for the checked conditions.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Algebraic identity tolerance (involution, automorphism, axioms input).
    pub algebra: f64,
    /// Relative singular-value cutoff for subspace fixpoint loops.
    pub rank: f64,
    /// Axiom residual bound for `verify`.
    pub axiom: f64,
    /// Flow identity residual bound for `flows`.
    pub flow: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            algebra: 1e-9,
            rank: 1e-8,
            axiom: 1e-9,
            flow: 1e-5,
        }
    }
}

/// Finite-difference steps.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct FdSteps {
    pub first_order: f64,
    pub field_jacobian: f64,
}

impl Default for FdSteps {
    fn default() -> Self {
        FdSteps {
            first_order: 1e-5,
            field_jacobian: 1e-4,
        }
    }
}

/// Flow-check parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowParams {
    pub t_grid: Vec<f64>,
    pub probes: usize,
    pub probe_radius: f64,
    pub rk_step: f64,
    pub parity_tol: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams {
            t_grid: vec![0.05, 0.1, 0.15],
            probes: 20,
            probe_radius: 0.05,
            rk_step: 1e-3,
            parity_tol: 1e-4,
        }
    }
}

/// Reconstruction parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct ReconstructionParams {
    pub cloud_per_dim: usize,
    pub fit_points: usize,
    pub rank_rel_tol: f64,
    pub fingerprint_rank_tol: f64,
}

impl Default for ReconstructionParams {
    fn default() -> Self {
        ReconstructionParams {
            cloud_per_dim: 50,
            fit_points: 30,
            rank_rel_tol: 1e-6,
            fingerprint_rank_tol: 1e-3,
        }
    }
}

/// The run configuration file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub algebra: String,
    pub involution: String,
    #[serde(default)]
    pub k_basis: Option<String>,
    #[serde(default = "default_trust_radius")]
    pub trust_radius: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub fd: FdSteps,
    #[serde(default)]
    pub flow: FlowParams,
    #[serde(default)]
    pub reconstruction: ReconstructionParams,
    /// Negative control: also run the flow gate on a deliberately even
    /// field, which must be rejected.
    #[serde(default)]
    pub inject_parity_violation: bool,
    #[serde(default)]
    pub out: Option<String>,
}

fn default_trust_radius() -> f64 {
    0.3
}

fn default_seed() -> u64 {
    42
}

fn default_samples() -> usize {
    1000
}

/// Involution input: an explicit coordinate matrix, a group element whose
/// adjoint action defines it, or both.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvolutionFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_matrix: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubspaceFile {
    pub vectors: Vec<Vec<f64>>,
}

/// Everything loaded and validated, ready for the commands.
pub struct LoadedInputs {
    pub spec: LieAlgebraSpec,
    pub involution: Involution,
    pub h_matrix: Option<GroupElement>,
    pub k_basis: Vec<DVector<f64>>,
}

impl RunConfig {
    fn validate(&self) -> Result<(), String> {
        let positives = [
            ("trust_radius", self.trust_radius),
            ("tolerances.algebra", self.tolerances.algebra),
            ("tolerances.rank", self.tolerances.rank),
            ("tolerances.axiom", self.tolerances.axiom),
            ("tolerances.flow", self.tolerances.flow),
            ("fd.first_order", self.fd.first_order),
            ("fd.field_jacobian", self.fd.field_jacobian),
            ("flow.probe_radius", self.flow.probe_radius),
            ("flow.rk_step", self.flow.rk_step),
            ("flow.parity_tol", self.flow.parity_tol),
            (
                "reconstruction.rank_rel_tol",
                self.reconstruction.rank_rel_tol,
            ),
            (
                "reconstruction.fingerprint_rank_tol",
                self.reconstruction.fingerprint_rank_tol,
            ),
        ];
        for (name, value) in positives {
            if !value.is_finite() || value <= 0.0 {
                return Err(format!("{name} must be positive, got {value}"));
            }
        }
        if self.samples == 0 {
            return Err("samples must be at least 1".into());
        }
        Ok(())
    }
}

pub fn read_config(path: &Path) -> Result<(RunConfig, PathBuf), String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let config: RunConfig =
        serde_json::from_str(&text).map_err(|e| format!("bad config {}: {e}", path.display()))?;
    config.validate()?;
    let base = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((config, base))
}

fn resolve(base: &Path, rel: &str) -> PathBuf {
    let p = Path::new(rel);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn load_inputs(config: &RunConfig, base: &Path) -> Result<LoadedInputs, String> {
    let algebra_path = resolve(base, &config.algebra);
    let text = std::fs::read_to_string(&algebra_path)
        .map_err(|e| format!("cannot read {}: {e}", algebra_path.display()))?;
    let spec = LieAlgebraSpec::from_json_str(&text).map_err(|e| format!("algebra: {e}"))?;

    let inv_path = resolve(base, &config.involution);
    let text = std::fs::read_to_string(&inv_path)
        .map_err(|e| format!("cannot read {}: {e}", inv_path.display()))?;
    let inv_file: InvolutionFile = serde_json::from_str(&text)
        .map_err(|e| format!("bad involution file {}: {e}", inv_path.display()))?;

    let h_matrix = match &inv_file.h_matrix {
        None => None,
        Some(rows) => {
            let m = matrix_from_rows(rows).map_err(|e| format!("h matrix: {e}"))?;
            Some(GroupElement::new(m).map_err(|e| format!("h matrix: {e}"))?)
        }
    };

    let involution = match &inv_file.sigma {
        Some(rows) => {
            let sigma: DMatrix<f64> = matrix_from_rows(rows).map_err(|e| format!("sigma: {e}"))?;
            let inv = Involution::from_sigma(&spec, sigma, config.tolerances.algebra)
                .map_err(|e| format!("involution: {e}"))?;
            match &h_matrix {
                Some(h) => inv.with_group_element(h.clone()),
                None => inv,
            }
        }
        None => {
            let h = h_matrix
                .clone()
                .ok_or_else(|| "involution file needs sigma or h_matrix".to_string())?;
            Involution::from_group_element(&spec, h, config.tolerances.algebra)
                .map_err(|e| format!("involution: {e}"))?
        }
    };

    let k_basis = match &config.k_basis {
        None => Vec::new(),
        Some(rel) => {
            let k_path = resolve(base, rel);
            let text = std::fs::read_to_string(&k_path)
                .map_err(|e| format!("cannot read {}: {e}", k_path.display()))?;
            let file: SubspaceFile = serde_json::from_str(&text)
                .map_err(|e| format!("bad subspace file {}: {e}", k_path.display()))?;
            file.vectors.into_iter().map(DVector::from_vec).collect()
        }
    };

    Ok(LoadedInputs {
        spec,
        involution,
        h_matrix,
        k_basis,
    })
}

//! Scenario configuration: TOML for human-authored files, JSON for machine
//! round-trips; both deserialize into the same validated structure.

use anyhow::{bail, Context};
use carnot_lab::fields::{
    check_admissibility, DriftComponent, DriftExpr, DriftSpec, SpaceTimeGrid, SpatialGrid,
};
use carnot_lab::group::{by_name, CarnotGroupSpec, GroupSpecFile};
use carnot_lab::report::AdmissibilityReport;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub experiment: ExperimentKind,
    pub group: GroupRef,
    pub drift: DriftConfig,
    pub horizon: f64,
    pub grid: GridConfig,
    pub mc: McConfig,
    pub x0: Vec<f64>,
    /// Derivative-sup target of the λ selection.
    pub epsilon: f64,
    /// Stopping-ball radius; defaults to the largest ball fitting the box.
    #[serde(default)]
    pub omega_radius: Option<f64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    HeatChecks,
    KernelScaling,
    Kolmogorov,
    ZvonkinUniqueness,
    Krylov,
    Embedding,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::HeatChecks => "heat_checks",
            ExperimentKind::KernelScaling => "kernel_scaling",
            ExperimentKind::Kolmogorov => "kolmogorov",
            ExperimentKind::ZvonkinUniqueness => "zvonkin_uniqueness",
            ExperimentKind::Krylov => "krylov",
            ExperimentKind::Embedding => "embedding",
        }
    }
}

/// A built-in group by name, or a JSON spec file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroupRef {
    Name { name: String },
    File { spec_path: PathBuf },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DriftConfig {
    /// `horizontal`: components are the b^i of b = Σ b^i Z_i (length m).
    /// `euclidean`: a coordinate-frame vector field (length N) — only
    /// admissible on abelian groups, where ∂_j = Z_j.
    #[serde(default = "default_frame")]
    pub frame: DriftFrame,
    pub components: Vec<DriftExpr>,
    pub p: f64,
    pub q: f64,
}

fn default_frame() -> DriftFrame {
    DriftFrame::Horizontal
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftFrame {
    Horizontal,
    Euclidean,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridConfig {
    pub bounds: Vec<f64>,
    pub n_x: Vec<usize>,
    pub n_t: usize,
    pub fd_step: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct McConfig {
    pub paths: usize,
    pub steps: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let cfg: ExperimentConfig = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text).context("invalid JSON config")?,
            _ => toml::from_str(&text).context("invalid TOML config")?,
        };
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn resolve_group(&self) -> anyhow::Result<CarnotGroupSpec> {
        match &self.group {
            GroupRef::Name { name } => {
                by_name(name).ok_or_else(|| anyhow::anyhow!("unknown group name `{name}`"))
            }
            GroupRef::File { spec_path } => {
                if !spec_path.exists() {
                    bail!("group spec file not found: {}", spec_path.display());
                }
                Ok(GroupSpecFile::load(spec_path)?)
            }
        }
    }

    pub fn build_grid(&self) -> anyhow::Result<Arc<SpaceTimeGrid>> {
        let space = SpatialGrid::new(self.grid.bounds.clone(), self.grid.n_x.clone())?;
        Ok(Arc::new(SpaceTimeGrid::new(
            self.horizon,
            self.grid.n_t,
            space,
            self.grid.fd_step,
        )?))
    }

    pub fn build_drift(&self, group: &CarnotGroupSpec) -> anyhow::Result<DriftSpec> {
        match self.drift.frame {
            DriftFrame::Horizontal => {
                if self.drift.components.len() != group.horizontal_dim() {
                    bail!(
                        "drift.components has {} entries; horizontal frame needs m = {}",
                        self.drift.components.len(),
                        group.horizontal_dim()
                    );
                }
            }
            DriftFrame::Euclidean => {
                if group.step() > 1 {
                    bail!(
                        "drift in the euclidean frame violates the horizontal-span condition on {} (step {} > 1); express b in the Z-frame",
                        group.name(),
                        group.step()
                    );
                }
                if self.drift.components.len() != group.dim() {
                    bail!(
                        "euclidean-frame drift needs N = {} components",
                        group.dim()
                    );
                }
            }
        }
        Ok(DriftSpec::new(
            self.drift
                .components
                .iter()
                .cloned()
                .map(DriftComponent::Expr)
                .collect(),
            self.drift.p,
            self.drift.q,
        ))
    }

    /// The stopping ball: configured radius, or the largest ball around x0
    /// leaving a 2δ margin to the box.
    pub fn omega_radius(&self, grid: &SpaceTimeGrid) -> f64 {
        self.omega_radius.unwrap_or_else(|| {
            self.x0
                .iter()
                .zip(&grid.space.bounds)
                .map(|(x, b)| b - x.abs())
                .fold(f64::INFINITY, f64::min)
                - 2.0 * grid.fd_step
        })
    }
}

#[derive(Debug, Serialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub issues: Vec<String>,
    pub admissibility: Option<AdmissibilityReport>,
}

/// Static checks: group resolvable, frames/dimensions consistent, the
/// exponent condition and grid-norm finiteness of the drift, box margins.
pub fn validate(cfg: &ExperimentConfig) -> ValidationReport {
    let mut issues = Vec::new();
    let group = match cfg.resolve_group() {
        Ok(g) => g,
        Err(e) => {
            return ValidationReport {
                valid: false,
                issues: vec![format!("{e:#}")],
                admissibility: None,
            }
        }
    };
    let grid = match cfg.build_grid() {
        Ok(g) => g,
        Err(e) => {
            return ValidationReport {
                valid: false,
                issues: vec![format!("{e:#}")],
                admissibility: None,
            }
        }
    };
    if cfg.grid.bounds.len() != group.dim() {
        issues.push(format!(
            "grid.bounds has {} entries but the group dimension is {}",
            cfg.grid.bounds.len(),
            group.dim()
        ));
    }
    if cfg.x0.len() != group.dim() {
        issues.push(format!(
            "x0 has {} coordinates but the group dimension is {}",
            cfg.x0.len(),
            group.dim()
        ));
    }
    let drift = match cfg.build_drift(&group) {
        Ok(d) => d,
        Err(e) => {
            issues.push(format!("{e:#}"));
            return ValidationReport {
                valid: false,
                issues,
                admissibility: None,
            };
        }
    };
    if !(cfg.epsilon > 0.0) {
        issues.push("epsilon must be positive".into());
    }
    if cfg.mc.paths == 0 || cfg.mc.steps == 0 {
        issues.push("mc.paths and mc.steps must be positive".into());
    }
    // Box must contain the drift support with a 2δ margin.
    let min_bound = cfg
        .grid
        .bounds
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if drift.support_radius > 0.0 && drift.support_radius + 2.0 * cfg.grid.fd_step > min_bound {
        issues.push(format!(
            "drift support radius {} plus a 2δ margin exceeds the box bound {min_bound}",
            drift.support_radius
        ));
    }
    if cfg.x0.len() == group.dim() && cfg.omega_radius(&grid) <= 0.0 {
        issues.push("x0 leaves no room for a stopping ball inside the box".into());
    }
    let admissibility = match check_admissibility(&drift, &group, grid) {
        Ok(rep) => {
            if !rep.exponent_ok {
                issues.push(format!(
                    "drift exponents rejected: 2/q + Q/p = {:.4} ≥ 1 (p = {}, q = {}, Q = {})",
                    rep.exponent_sum, cfg.drift.p, cfg.drift.q, rep.homogeneous_dim
                ));
            }
            if !rep.all_finite {
                issues.push("a drift derivative norm is non-finite on the grid".into());
            }
            Some(rep)
        }
        Err(e) => {
            issues.push(format!("admissibility check failed: {e}"));
            None
        }
    };
    ValidationReport {
        valid: issues.is_empty(),
        issues,
        admissibility,
    }
}

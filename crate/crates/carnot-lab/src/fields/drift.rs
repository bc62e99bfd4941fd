//! Horizontal drifts `b = Σ b^i Z_i` and the admissibility checks: the
//! exponent condition `2/q + Q/p < 1` plus finiteness of the mixed norms of
//! `Z_I b^i` for all |I| ≤ r-1.

use super::{GridField, SpaceTimeGrid};
use crate::error::{Error, Result};
use crate::fields::derivative::{horizontal_derivative_with, multi_indices, HorizontalStencil};
use crate::fields::norms::mixed_norm;
use crate::group::CarnotGroupSpec;
use crate::report::{AdmissibilityReport, DerivativeNorm, Verdict};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Closed-form drift component family shipped with the lab. Singularities
/// are truncated at a floor scale so that grid sampling stays finite; the
/// bump factor enforces compact support (radius in the homogeneous norm).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DriftExpr {
    Zero,
    /// `amplitude · bump(‖x‖/radius)`
    Bump { amplitude: f64, radius: f64 },
    /// `amplitude · x_coord · bump(‖x‖/radius)`
    CoordBump {
        amplitude: f64,
        coord: usize,
        radius: f64,
    },
    /// `amplitude · max(‖x‖, floor)^(-gamma) · bump(‖x‖/radius)` — the
    /// truncated homogeneous singularity; γ < Q/p keeps the L^p norm of the
    /// untruncated profile finite.
    SingularBump {
        amplitude: f64,
        gamma: f64,
        floor: f64,
        radius: f64,
    },
}

fn bump01(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

impl DriftExpr {
    pub fn eval(&self, group: &CarnotGroupSpec, _t: f64, x: &[f64]) -> f64 {
        match self {
            DriftExpr::Zero => 0.0,
            DriftExpr::Bump { amplitude, radius } => {
                amplitude * bump01(group.homogeneous_norm(x) / radius)
            }
            DriftExpr::CoordBump {
                amplitude,
                coord,
                radius,
            } => amplitude * x[*coord] * bump01(group.homogeneous_norm(x) / radius),
            DriftExpr::SingularBump {
                amplitude,
                gamma,
                floor,
                radius,
            } => {
                let norm = group.homogeneous_norm(x);
                amplitude * norm.max(*floor).powf(-gamma) * bump01(norm / radius)
            }
        }
    }

    pub fn support_radius(&self) -> f64 {
        match self {
            DriftExpr::Zero => 0.0,
            DriftExpr::Bump { radius, .. }
            | DriftExpr::CoordBump { radius, .. }
            | DriftExpr::SingularBump { radius, .. } => *radius,
        }
    }
}

/// One drift component: a closed-form expression or grid-sampled data.
#[derive(Clone, Debug)]
pub enum DriftComponent {
    Expr(DriftExpr),
    Grid(GridField),
}

impl DriftComponent {
    pub fn eval(&self, group: &CarnotGroupSpec, t: f64, x: &[f64]) -> f64 {
        match self {
            DriftComponent::Expr(e) => e.eval(group, t, x),
            DriftComponent::Grid(f) => f.eval(t, x),
        }
    }
}

/// The horizontal drift `b = Σ_{i<m} b^i Z_i` with its integrability
/// exponents. Components vanish outside the support radius.
#[derive(Clone, Debug)]
pub struct DriftSpec {
    pub components: Vec<DriftComponent>,
    pub p: f64,
    pub q: f64,
    pub support_radius: f64,
}

impl DriftSpec {
    pub fn new(components: Vec<DriftComponent>, p: f64, q: f64) -> Self {
        let support_radius = components
            .iter()
            .map(|c| match c {
                DriftComponent::Expr(e) => e.support_radius(),
                DriftComponent::Grid(f) => f
                    .grid()
                    .space
                    .bounds
                    .iter()
                    .cloned()
                    .fold(0.0, f64::max),
            })
            .fold(0.0, f64::max);
        DriftSpec {
            components,
            p,
            q,
            support_radius,
        }
    }

    pub fn zero(m: usize, p: f64, q: f64) -> Self {
        DriftSpec::new(vec![DriftComponent::Expr(DriftExpr::Zero); m], p, q)
    }

    pub fn horizontal_dim(&self) -> usize {
        self.components.len()
    }

    pub fn is_zero(&self) -> bool {
        self.components
            .iter()
            .all(|c| matches!(c, DriftComponent::Expr(DriftExpr::Zero)))
    }

    /// `b^i(t, x)`.
    pub fn component(&self, group: &CarnotGroupSpec, i: usize, t: f64, x: &[f64]) -> f64 {
        self.components[i].eval(group, t, x)
    }

    /// The drift as a Euclidean vector: `Σ_i b^i(t,x) Z_i(x)`, written into
    /// `out` (length N).
    pub fn euclidean_vector_into(
        &self,
        group: &CarnotGroupSpec,
        t: f64,
        x: &[f64],
        out: &mut Vec<f64>,
    ) {
        let n = group.dim();
        out.clear();
        out.resize(n, 0.0);
        let mut z = Vec::with_capacity(n);
        for i in 0..self.components.len() {
            let bi = self.component(group, i, t, x);
            if bi != 0.0 {
                group.left_invariant_field_into(x, i, &mut z);
                for k in 0..n {
                    out[k] += bi * z[k];
                }
            }
        }
    }

    /// 2/q + Q/p, the quantity that must be < 1.
    pub fn exponent_sum(&self, group: &CarnotGroupSpec) -> f64 {
        2.0 / self.q + group.homogeneous_dim() as f64 / self.p
    }

    /// Samples component i onto the grid.
    pub fn sample_component(
        &self,
        group: &CarnotGroupSpec,
        grid: Arc<SpaceTimeGrid>,
        i: usize,
    ) -> GridField {
        GridField::from_fn(grid, |t, x| self.component(group, i, t, x))
    }
}

/// Admissibility per the main-theorem hypotheses: exponent condition plus
/// finite `‖Z_I b^i‖_{L^q L^p}` for all |I| ≤ r-1, measured on the grid.
pub fn check_admissibility(
    drift: &DriftSpec,
    group: &CarnotGroupSpec,
    grid: Arc<SpaceTimeGrid>,
) -> Result<AdmissibilityReport> {
    if drift.horizontal_dim() != group.horizontal_dim() {
        return Err(Error::DimensionMismatch {
            expected: group.horizontal_dim(),
            got: drift.horizontal_dim(),
        });
    }
    let exponent_sum = drift.exponent_sum(group);
    let exponents_in_range =
        drift.p > 1.0 && drift.p.is_finite() && drift.q > 1.0 && drift.q.is_finite();
    let exponent_ok = exponents_in_range && exponent_sum < 1.0;

    let order = group.step() - 1;
    let stencil = HorizontalStencil::new(group, grid.clone(), grid.fd_step);
    let indices = multi_indices(group.horizontal_dim(), order);
    let mut derivative_norms = Vec::new();
    let mut all_finite = true;
    for i in 0..drift.horizontal_dim() {
        let sampled = drift.sample_component(group, grid.clone(), i);
        let mut cache: Vec<(Vec<usize>, GridField)> = vec![(vec![], sampled)];
        for idx in &indices {
            let field = if idx.is_empty() {
                cache[0].1.clone()
            } else {
                let parent = cache
                    .iter()
                    .find(|(ci, _)| ci == &idx[..idx.len() - 1])
                    .expect("graded order")
                    .1
                    .clone();
                let d = horizontal_derivative_with(&stencil, &parent, idx[idx.len() - 1]);
                cache.push((idx.clone(), d.clone()));
                d
            };
            let norm = mixed_norm(&field, drift.q, drift.p)?;
            if !norm.is_finite() {
                all_finite = false;
            }
            derivative_norms.push(DerivativeNorm {
                component: i,
                multi_index: idx.clone(),
                norm,
            });
        }
    }

    Ok(AdmissibilityReport {
        p: drift.p,
        q: drift.q,
        homogeneous_dim: group.homogeneous_dim(),
        exponent_sum,
        exponent_margin: 1.0 - exponent_sum,
        exponent_ok,
        derivative_norms,
        all_finite,
        verdict: Verdict::from_bool(exponent_ok && all_finite),
    })
}

//! The explicit exponential-Euler march shared by the heat and Kolmogorov
//! solvers, in the forward variable `v(s)`:
//!
//!   `v_s = ν L_δ v - λ v + g(s)`,
//!   `v^{j+1} = e^{-λΔt} v^j + Δt φ₁(λΔt) (ν L_δ v^j + g_j)`.
//!
//! The λ relaxation is integrated exactly (φ₁(x) = (1-e^{-x})/x), so the
//! stiff part never constrains the step. The plug-in residual compares the
//! stored solution against an independent identity — the trapezoidal
//! variation-of-constants form over each substep — using the solution's own
//! drift rather than the lagged Picard source.

use super::SolverOptions;
use crate::error::{Error, Result};
use crate::fields::{GridField, HorizontalStencil, SpaceTimeGrid};
use crate::group::CarnotGroupSpec;
use ndarray::Array2;
use std::sync::Arc;

pub(crate) struct StepPlan {
    pub substeps: usize,
    pub dt: f64,
    pub nu: f64,
    pub lambda: f64,
}

impl StepPlan {
    /// Derives the substep count from the explicit-stability bound
    /// `Δt ≤ δ²/(2mν)`, a drift CFL `Δt ≤ δ/max|b|`, and an accuracy cap
    /// `λΔt ≤ 0.05`; refuses a forced coarser step.
    pub fn build(
        group: &CarnotGroupSpec,
        grid: &SpaceTimeGrid,
        nu: f64,
        lambda: f64,
        drift_sup: f64,
        opts: &SolverOptions,
    ) -> Result<StepPlan> {
        let delta = grid.fd_step;
        let m = group.horizontal_dim() as f64;
        let mut required = if nu > 0.0 {
            delta * delta / (2.0 * m * nu)
        } else {
            f64::INFINITY
        };
        if drift_sup > 0.0 {
            required = required.min(delta / drift_sup);
        }
        if lambda > 0.0 {
            required = required.min(0.05 / lambda);
        }
        required *= opts.safety;
        let dt_slice = grid.dt();
        let substeps = match opts.substeps_per_slice {
            Some(s) => {
                let dt = dt_slice / s as f64;
                if dt > required {
                    return Err(Error::UnstableStep { dt, required });
                }
                s
            }
            None => (dt_slice / required).ceil().max(1.0) as usize,
        };
        Ok(StepPlan {
            substeps,
            dt: dt_slice / substeps as f64,
            nu,
            lambda,
        })
    }
}

fn phi1(x: f64) -> f64 {
    if x.abs() < 1e-6 {
        1.0 - x / 2.0 + x * x / 6.0
    } else {
        (1.0 - (-x).exp()) / x
    }
}

/// Fixed source term of the march. `reversed` reads the field at `T - s`
/// (backward problems); substep times interpolate linearly between slices.
pub(crate) struct SourceSpec<'a> {
    pub field: Option<&'a GridField>,
    pub sign: f64,
    pub reversed: bool,
}

impl SourceSpec<'_> {
    /// Adds `sign · f(time)` into `out`.
    fn add_into(&self, grid: &SpaceTimeGrid, s: f64, out: &mut [f64]) {
        let Some(field) = self.field else { return };
        let t = if self.reversed { grid.horizon - s } else { s };
        let dt = grid.dt();
        let pos = (t / dt).clamp(0.0, (grid.n_t - 1) as f64);
        let k0 = (pos.floor() as usize).min(grid.n_t - 2);
        let frac = pos - k0 as f64;
        let lo = field.time_slice(k0);
        let hi = field.time_slice(k0 + 1);
        for (i, o) in out.iter_mut().enumerate() {
            *o += self.sign * (lo[i] * (1.0 - frac) + hi[i] * frac);
        }
    }
}

/// Drift coefficients `b̂^i` on the grid nodes, per horizontal direction.
/// `Static` holds one slice per direction; `PerSlice` holds one per stored
/// slice per direction (substeps interpolate linearly).
pub(crate) enum DriftSlices {
    Static(Vec<Vec<f64>>),
    PerSlice(Vec<Vec<Vec<f64>>>),
}

impl DriftSlices {
    pub fn sup(&self) -> f64 {
        let slices: Box<dyn Iterator<Item = &Vec<f64>>> = match self {
            DriftSlices::Static(v) => Box::new(v.iter()),
            DriftSlices::PerSlice(v) => Box::new(v.iter().flatten()),
        };
        slices
            .flat_map(|s| s.iter())
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    fn gather(&self, grid: &SpaceTimeGrid, s: f64, scratch: &mut Vec<Vec<f64>>) {
        match self {
            DriftSlices::Static(v) => {
                scratch.clone_from(v);
            }
            DriftSlices::PerSlice(v) => {
                let dt = grid.dt();
                let pos = (s / dt).clamp(0.0, (grid.n_t - 1) as f64);
                let k0 = (pos.floor() as usize).min(grid.n_t - 2);
                let frac = pos - k0 as f64;
                scratch.clear();
                for dir in v {
                    let lo = &dir[k0];
                    let hi = &dir[k0 + 1];
                    scratch.push(
                        lo.iter()
                            .zip(hi)
                            .map(|(a, b)| a * (1.0 - frac) + b * frac)
                            .collect(),
                    );
                }
            }
        }
    }
}

pub(crate) struct MarchResult {
    /// Stored output slices, one per grid time.
    pub output: Vec<Vec<f64>>,
    /// `b̂·Z_δ v` at every substep (present when drift slices were given);
    /// feeds the next Picard iterate.
    pub drift_source: Option<Vec<Vec<f64>>>,
    /// Discrete L²(dt×dx) norm of the trapezoidal plug-in defect density.
    pub residual: f64,
}

/// Marches `v` over the output-slice range `slice_range = (a, b)`, starting
/// from `init` at slice a. `s_prev[j]` (if given) is added to the source at
/// local substep j — the lagged Picard drift term.
#[allow(clippy::too_many_arguments)]
pub(crate) fn march_scalar_segment(
    stencil: &HorizontalStencil,
    grid: &Arc<SpaceTimeGrid>,
    plan: &StepPlan,
    fixed_source: &SourceSpec<'_>,
    s_prev: Option<&[Vec<f64>]>,
    drift: Option<&DriftSlices>,
    init: &[f64],
    slice_range: (usize, usize),
    want_residual: bool,
) -> MarchResult {
    let len = grid.space.len();
    let (a, b) = slice_range;
    debug_assert!(a < b && b < grid.n_t);
    let total = (b - a) * plan.substeps;
    let s_offset = grid.time(a);
    let dt = plan.dt;
    let x = plan.lambda * dt;
    let decay = (-x).exp();
    let weight = dt * phi1(x);

    let mut v = init.to_vec();
    let mut v_next = vec![0.0; len];
    let mut lap = vec![0.0; len];
    let mut lap_next = vec![0.0; len];
    let mut g = vec![0.0; len];
    let mut g_next = vec![0.0; len];
    let mut drift_scratch: Vec<Vec<f64>> = Vec::new();
    let mut drift_term = vec![0.0; len];
    let mut drift_term_next = vec![0.0; len];

    let mut output = Vec::with_capacity(b - a + 1);
    output.push(v.clone());
    let mut drift_source = drift.map(|_| Vec::with_capacity(total + 1));

    stencil.sub_laplacian_slice(&v, &mut lap);
    fill_source(grid, fixed_source, s_prev, 0, s_offset, &mut g);
    if let Some(d) = drift {
        d.gather(grid, s_offset, &mut drift_scratch);
        stencil.drift_term_slice(&drift_scratch, &v, &mut drift_term);
        if let Some(src) = drift_source.as_mut() {
            src.push(drift_term.clone());
        }
    }

    let mut residual_sq = 0.0;
    for j in 0..total {
        let s_next = s_offset + (j + 1) as f64 * dt;
        for node in 0..len {
            v_next[node] = decay * v[node] + weight * (plan.nu * lap[node] + g[node]);
        }
        stencil.sub_laplacian_slice(&v_next, &mut lap_next);
        fill_source(grid, fixed_source, s_prev, j + 1, s_next, &mut g_next);
        if let Some(d) = drift {
            d.gather(grid, s_next, &mut drift_scratch);
            stencil.drift_term_slice(&drift_scratch, &v_next, &mut drift_term_next);
            if let Some(src) = drift_source.as_mut() {
                src.push(drift_term_next.clone());
            }
        }
        if want_residual {
            // H = νL_δv + b̂Z_δv + f-part; the Picard lag is replaced by the
            // solution's own drift term. g already contains s_prev, so swap
            // it for the current drift when a drift is present.
            for node in 0..len {
                let h_cur = plan.nu * lap[node] + own_source(&g, s_prev, j, node) + drift_term[node];
                let h_next = plan.nu * lap_next[node]
                    + own_source(&g_next, s_prev, j + 1, node)
                    + drift_term_next[node];
                let rho = v_next[node] - decay * v[node] - 0.5 * dt * (decay * h_cur + h_next);
                let defect = rho / dt;
                residual_sq += grid.space.quad_weight(node) * dt * defect * defect;
            }
        }
        std::mem::swap(&mut v, &mut v_next);
        std::mem::swap(&mut lap, &mut lap_next);
        std::mem::swap(&mut g, &mut g_next);
        std::mem::swap(&mut drift_term, &mut drift_term_next);
        if (j + 1) % plan.substeps == 0 {
            output.push(v.clone());
        }
    }

    MarchResult {
        output,
        drift_source,
        residual: residual_sq.sqrt(),
    }
}

/// Whole-horizon march from zero initial data.
pub(crate) fn march_scalar(
    stencil: &HorizontalStencil,
    grid: &Arc<SpaceTimeGrid>,
    plan: &StepPlan,
    fixed_source: &SourceSpec<'_>,
    s_prev: Option<&[Vec<f64>]>,
    drift: Option<&DriftSlices>,
    want_residual: bool,
) -> MarchResult {
    let init = vec![0.0; grid.space.len()];
    march_scalar_segment(
        stencil,
        grid,
        plan,
        fixed_source,
        s_prev,
        drift,
        &init,
        (0, grid.n_t - 1),
        want_residual,
    )
}

fn fill_source(
    grid: &SpaceTimeGrid,
    fixed: &SourceSpec<'_>,
    s_prev: Option<&[Vec<f64>]>,
    sub: usize,
    s: f64,
    out: &mut [f64],
) {
    for o in out.iter_mut() {
        *o = 0.0;
    }
    fixed.add_into(grid, s, out);
    if let Some(prev) = s_prev {
        for (o, p) in out.iter_mut().zip(&prev[sub]) {
            *o += p;
        }
    }
}

/// The fixed part of the source (g minus the lagged drift term).
#[inline]
fn own_source(g: &[f64], s_prev: Option<&[Vec<f64>]>, sub: usize, node: usize) -> f64 {
    match s_prev {
        Some(prev) => g[node] - prev[sub][node],
        None => g[node],
    }
}

pub(crate) fn slices_to_array(slices: &[Vec<f64>], len: usize) -> Array2<f64> {
    let mut arr = Array2::zeros((slices.len(), len));
    for (k, s) in slices.iter().enumerate() {
        for (node, v) in s.iter().enumerate() {
            arr[(k, node)] = *v;
        }
    }
    arr
}

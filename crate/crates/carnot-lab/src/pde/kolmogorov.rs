//! The backward Kolmogorov equation with singular drift,
//! `u_t + ½Lu + Σ b^i Z_i u - λu = f`, `u(T) = 0`, by time reversal: with
//! `v(s) = u(T-s)` the forward problem is
//! `v_s = ½L v + b̂·Zv - λv - f̂`, `v(0) = 0`.
//!
//! The drift term is Picard-iterated: iterate k+1 solves the heat-with-λ
//! problem with the lagged source `b̂·Z_δ v_k`, until the S^{1,(q,p)}
//! distance of successive iterates drops below tolerance. When the distance
//! grows twice in a row, the horizon-splitting fallback solves on
//! `[T-T₁, T]` first and restarts from the attained state.

use super::stepper::{march_scalar_segment, DriftSlices, SourceSpec, StepPlan};
use super::{euclidean_gradient_sup, PdeSolution, SolverOptions};
use crate::error::{Error, Result};
use crate::fields::{sobolev_norm, DriftComponent, DriftSpec, GridField, HorizontalStencil};
use crate::group::CarnotGroupSpec;
use crate::Result as CrateResult;
use ndarray::Array2;
use std::sync::Arc;

pub fn solve_kolmogorov(
    group: &CarnotGroupSpec,
    drift: &DriftSpec,
    f: &[GridField],
    lambda: f64,
    opts: &SolverOptions,
) -> CrateResult<PdeSolution> {
    if f.is_empty() {
        return Err(Error::Contract("no source components".into()));
    }
    let grid = f[0].grid().clone();
    for comp in f {
        if comp.grid().as_ref() != grid.as_ref() {
            return Err(Error::Contract(
                "source components live on different grids".into(),
            ));
        }
        if !comp.is_finite() {
            return Err(Error::Contract("source field has non-finite values".into()));
        }
    }
    if drift.horizontal_dim() != group.horizontal_dim() {
        return Err(Error::DimensionMismatch {
            expected: group.horizontal_dim(),
            got: drift.horizontal_dim(),
        });
    }
    if !drift.is_zero() && drift.exponent_sum(group) >= 1.0 {
        return Err(Error::Contract(format!(
            "drift is not admissible: 2/q + Q/p = {:.4} ≥ 1",
            drift.exponent_sum(group)
        )));
    }

    // All-zero source short-circuits: u ≡ 0 with zero iterations.
    if f.iter().all(|c| c.values().iter().all(|v| *v == 0.0)) {
        return Ok(PdeSolution {
            components: f
                .iter()
                .map(|_| GridField::zeros(grid.clone()))
                .collect(),
            residual_norm: 0.0,
            iterations: 0,
            lambda,
            grad_sup: 0.0,
        });
    }

    let stencil = HorizontalStencil::new(group, grid.clone(), grid.fd_step);
    let drift_slices = build_reversed_drift(group, drift, &grid);
    let drift_sup = drift_slices.as_ref().map(|d| d.sup()).unwrap_or(0.0);
    let plan = StepPlan::build(group, &grid, 0.5, lambda, drift_sup, opts)?;

    let mut components = Vec::with_capacity(f.len());
    let mut residual_sq = 0.0f64;
    let mut iterations = 0usize;
    for comp in f {
        let solved = solve_scalar_component(
            group,
            &stencil,
            &grid,
            &plan,
            comp,
            drift_slices.as_ref(),
            opts,
        )?;
        iterations = iterations.max(solved.iterations);
        residual_sq += solved.residual * solved.residual;
        // v slices are in reversed time: u(t_k) = v(T - t_k).
        let len = grid.space.len();
        let mut arr = Array2::zeros((grid.n_t, len));
        for k in 0..grid.n_t {
            let src = &solved.v_slices[grid.n_t - 1 - k];
            for node in 0..len {
                arr[(k, node)] = src[node];
            }
        }
        components.push(GridField::from_values(grid.clone(), arr)?);
    }
    let grad_sup = euclidean_gradient_sup(&components);
    Ok(PdeSolution {
        components,
        residual_norm: residual_sq.sqrt(),
        iterations,
        lambda,
        grad_sup,
    })
}

/// Samples the drift coefficients on the grid nodes in reversed time,
/// `b̂^i(s, x) = b^i(T - s, x)`. Expression drifts are time-independent and
/// sampled once.
fn build_reversed_drift(
    group: &CarnotGroupSpec,
    drift: &DriftSpec,
    grid: &Arc<crate::fields::SpaceTimeGrid>,
) -> Option<DriftSlices> {
    if drift.is_zero() {
        return None;
    }
    let len = grid.space.len();
    let time_dependent = drift
        .components
        .iter()
        .any(|c| matches!(c, DriftComponent::Grid(_)));
    let mut x = vec![0.0; group.dim()];
    if !time_dependent {
        let mut slices = Vec::with_capacity(drift.horizontal_dim());
        for i in 0..drift.horizontal_dim() {
            let mut s = vec![0.0; len];
            for node in 0..len {
                grid.space.node_into(node, &mut x);
                s[node] = drift.component(group, i, 0.0, &x);
            }
            slices.push(s);
        }
        Some(DriftSlices::Static(slices))
    } else {
        let mut per_dir = Vec::with_capacity(drift.horizontal_dim());
        for i in 0..drift.horizontal_dim() {
            let mut per_slice = Vec::with_capacity(grid.n_t);
            for k in 0..grid.n_t {
                let t = grid.horizon - grid.time(k);
                let mut s = vec![0.0; len];
                for node in 0..len {
                    grid.space.node_into(node, &mut x);
                    s[node] = drift.component(group, i, t, &x);
                }
                per_slice.push(s);
            }
            per_dir.push(per_slice);
        }
        Some(DriftSlices::PerSlice(per_dir))
    }
}

struct ScalarSolve {
    v_slices: Vec<Vec<f64>>,
    iterations: usize,
    residual: f64,
}

fn solve_scalar_component(
    group: &CarnotGroupSpec,
    stencil: &HorizontalStencil,
    grid: &Arc<crate::fields::SpaceTimeGrid>,
    plan: &StepPlan,
    f: &GridField,
    drift: Option<&DriftSlices>,
    opts: &SolverOptions,
) -> Result<ScalarSolve> {
    // v_s = ½Lv + b̂Zv - λv - f̂: the fixed source is -f̂.
    let source = SourceSpec {
        field: Some(f),
        sign: -1.0,
        reversed: true,
    };

    // No drift: a single march is exact for the linear problem.
    let Some(drift) = drift else {
        let init = vec![0.0; grid.space.len()];
        let march = march_scalar_segment(
            stencil,
            grid,
            plan,
            &source,
            None,
            None,
            &init,
            (0, grid.n_t - 1),
            true,
        );
        return Ok(ScalarSolve {
            v_slices: march.output,
            iterations: 1,
            residual: march.residual,
        });
    };

    // Segment queue over output slices, marched in increasing s. A segment
    // that fails to contract is split in half (the backward-time restart).
    let mut v_slices: Vec<Vec<f64>> = vec![vec![0.0; grid.space.len()]];
    let mut residual_sq = 0.0;
    let mut iterations = 0usize;
    let mut segments: Vec<((usize, usize), u32)> = vec![((0, grid.n_t - 1), 0)];
    while let Some(((a, b), depth)) = segments.first().cloned() {
        segments.remove(0);
        let init = v_slices[a].clone();
        match picard_segment(
            group, stencil, grid, plan, &source, drift, &init, (a, b), opts,
        )? {
            PicardOutcome::Converged {
                slices,
                iters,
                residual,
            } => {
                iterations += iters;
                residual_sq += residual * residual;
                v_slices.truncate(a + 1);
                v_slices.extend(slices.into_iter().skip(1));
            }
            PicardOutcome::NotContracting => {
                if depth + 1 > opts.max_split_depth || b - a < 2 {
                    return Err(Error::NonContraction {
                        split_depth: depth,
                    });
                }
                let mid = (a + b) / 2;
                segments.insert(0, ((mid, b), depth + 1));
                segments.insert(0, ((a, mid), depth + 1));
            }
        }
    }
    Ok(ScalarSolve {
        v_slices,
        iterations,
        residual: residual_sq.sqrt(),
    })
}

enum PicardOutcome {
    Converged {
        slices: Vec<Vec<f64>>,
        iters: usize,
        residual: f64,
    },
    NotContracting,
}

#[allow(clippy::too_many_arguments)]
fn picard_segment(
    group: &CarnotGroupSpec,
    stencil: &HorizontalStencil,
    grid: &Arc<crate::fields::SpaceTimeGrid>,
    plan: &StepPlan,
    source: &SourceSpec<'_>,
    drift: &DriftSlices,
    init: &[f64],
    range: (usize, usize),
    opts: &SolverOptions,
) -> Result<PicardOutcome> {
    let (q, p) = opts.picard_norm;
    let mut s_prev: Option<Vec<Vec<f64>>> = None;
    let mut prev_field: Option<GridField> = None;
    let mut prev_distance = f64::INFINITY;
    let mut growth_streak = 0u32;
    for iter in 1..=opts.max_picard {
        let march = march_scalar_segment(
            stencil,
            grid,
            plan,
            source,
            s_prev.as_deref(),
            Some(drift),
            init,
            range,
            false,
        );
        let field = segment_field(grid, &march.output, range)?;
        if let Some(prev) = &prev_field {
            let mut diff = field.clone();
            diff.axpy(-1.0, prev);
            let distance = sobolev_norm(group, &diff, 1, q, p)?;
            if distance < opts.picard_tol {
                // Converged: one more pass for the plug-in residual.
                let final_march = march_scalar_segment(
                    stencil,
                    grid,
                    plan,
                    source,
                    march.drift_source.as_deref(),
                    Some(drift),
                    init,
                    range,
                    true,
                );
                return Ok(PicardOutcome::Converged {
                    slices: final_march.output,
                    iters: iter,
                    residual: final_march.residual,
                });
            }
            if distance > prev_distance {
                growth_streak += 1;
                if growth_streak >= 2 {
                    return Ok(PicardOutcome::NotContracting);
                }
            } else {
                growth_streak = 0;
            }
            prev_distance = distance;
        }
        prev_field = Some(field);
        s_prev = march.drift_source;
    }
    // Exhausting the budget without converging: treat as non-contraction so
    // the horizon splitting gets a chance.
    Ok(PicardOutcome::NotContracting)
}

/// Embeds segment slices into a full-grid field (zeros elsewhere) so the
/// Sobolev machinery can measure the Picard distance on the segment.
fn segment_field(
    grid: &Arc<crate::fields::SpaceTimeGrid>,
    slices: &[Vec<f64>],
    range: (usize, usize),
) -> Result<GridField> {
    let mut arr = Array2::zeros((grid.n_t, grid.space.len()));
    for (local, slice) in slices.iter().enumerate() {
        let k = range.0 + local;
        for (node, v) in slice.iter().enumerate() {
            arr[(k, node)] = *v;
        }
    }
    GridField::from_values(grid.clone(), arr).map_err(Into::into)
}

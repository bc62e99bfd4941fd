//! Integrated-form Itô-formula check: along stopped paths the defect
//!
//!   `u(t∧τ, X) - u(0, x0) - ∫ (u_t + Σ b^i Z_i u + ½Lu) dr - Σ ∫ Z_i u dB^i`
//!
//! has mean absolute value decreasing under step refinement.

use crate::error::{Error, Result};
use crate::fields::{
    horizontal_derivative, time_derivative, DriftSpec, GridField, HorizontalStencil,
};
use crate::group::CarnotGroupSpec;
use crate::pde::PdeSolution;
use crate::report::{RefinementReport, Verdict};
use crate::sde::{integrate_ensemble, Region, Scheme};
use crate::stats::log_log_slope;

/// Precomputed derivative fields of one solution component.
struct ComponentDerivatives {
    u: GridField,
    u_t: GridField,
    z_u: Vec<GridField>,
    lap_u: GridField,
}

fn prepare(group: &CarnotGroupSpec, u: &GridField) -> ComponentDerivatives {
    let grid = u.grid().clone();
    let delta = grid.fd_step;
    let stencil = HorizontalStencil::new(group, grid.clone(), delta);
    let mut z_u = Vec::with_capacity(group.horizontal_dim());
    for i in 0..group.horizontal_dim() {
        z_u.push(horizontal_derivative(group, u, i, delta));
    }
    let mut lap = GridField::zeros(grid.clone());
    let mut buf = vec![0.0; grid.space.len()];
    for k in 0..grid.n_t {
        stencil.sub_laplacian_slice(u.time_slice(k), &mut buf);
        for (node, v) in buf.iter().enumerate() {
            lap.values_mut()[(k, node)] = *v;
        }
    }
    ComponentDerivatives {
        u: u.clone(),
        u_t: time_derivative(u),
        z_u,
        lap_u: lap,
    }
}

/// Runs the defect refinement study over the given step counts (same seed,
/// independent paths per level) and reports whether the mean absolute
/// defect decreases.
#[allow(clippy::too_many_arguments)]
pub fn ito_consistency_check(
    group: &CarnotGroupSpec,
    drift: &DriftSpec,
    u: &PdeSolution,
    x0: &[f64],
    region: &Region,
    t_horizon: f64,
    step_counts: &[usize],
    n_paths: usize,
    seed: u64,
) -> Result<RefinementReport> {
    if step_counts.len() < 2 {
        return Err(Error::Contract("need at least two step counts".into()));
    }
    // The region must be covered by the solution's box.
    if let Region::Ball { center, radius } = region {
        let space = &u.components[0].grid().space;
        for j in 0..space.dim() {
            if center[j].abs() + radius > space.bounds[j] + 1e-12 {
                return Err(Error::Contract(
                    "stopping region is not covered by the solution grid".into(),
                ));
            }
        }
    }
    let derivs: Vec<ComponentDerivatives> = u
        .components
        .iter()
        .map(|c| prepare(group, c))
        .collect();

    let mut levels = Vec::with_capacity(step_counts.len());
    let mut defects = Vec::with_capacity(step_counts.len());
    for (li, &steps) in step_counts.iter().enumerate() {
        let ensemble = integrate_ensemble(
            group,
            drift,
            x0,
            t_horizon,
            steps,
            n_paths,
            seed,
            (li as u64) << 32,
            region,
            Scheme::LieExp,
        )?;
        let mut total = 0.0;
        for (pi, traj) in ensemble.trajectories.iter().enumerate() {
            let driver = crate::sde::sample_driver(
                group.horizontal_dim(),
                t_horizon,
                steps,
                seed,
                ((li as u64) << 32) + pi as u64,
            );
            let dt = traj.dt;
            let t_end = traj.tau().min(t_horizon);
            let mut defect_sq = 0.0;
            for d in &derivs {
                let mut acc = d.u.eval(t_end, traj.state(traj.tau_index))
                    - d.u.eval(0.0, x0);
                for k in 0..traj.tau_index {
                    let t = dt * k as f64;
                    let x = traj.state(k);
                    let mut gen = d.u_t.eval(t, x) + 0.5 * d.lap_u.eval(t, x);
                    for i in 0..group.horizontal_dim() {
                        gen += drift.component(group, i, t, x) * d.z_u[i].eval(t, x);
                    }
                    acc -= gen * dt;
                    let db = driver.step(k);
                    for i in 0..group.horizontal_dim() {
                        acc -= d.z_u[i].eval(t, x) * db[i];
                    }
                }
                defect_sq += acc * acc;
            }
            total += defect_sq.sqrt();
        }
        levels.push(t_horizon / steps as f64);
        defects.push(total / n_paths as f64);
    }
    let decreasing = defects.windows(2).all(|w| w[1] <= w[0]);
    let slope = if defects.iter().all(|d| *d > 0.0) {
        log_log_slope(&levels, &defects)
    } else {
        0.0
    };
    Ok(RefinementReport {
        scenario: "ito-consistency".into(),
        levels,
        defects,
        slope,
        verdict: Verdict::from_bool(decreasing),
        control_defect: None,
        threshold: None,
        notes: "defect must decrease as the SDE step refines".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{SpaceTimeGrid, SpatialGrid};
    use crate::group::euclidean;
    use crate::pde::PdeSolution;
    use std::sync::Arc;

    fn identity_solution() -> PdeSolution {
        let grid = Arc::new(
            SpaceTimeGrid::new(1.0, 5, SpatialGrid::cube(1, 50.0, 201), 0.5).unwrap(),
        );
        PdeSolution {
            components: vec![GridField::from_fn(grid, |_, x| x[0])],
            residual_norm: 0.0,
            iterations: 0,
            lambda: 0.0,
            grad_sup: 1.0,
        }
    }

    #[test]
    fn identity_function_has_zero_defect() {
        // u(t,x) = x on euclidean(1), b = 0: the defect telescopes to
        // X_T - x0 - ΣΔB = 0 exactly (up to float associativity).
        let g = euclidean(1);
        let drift = DriftSpec::zero(1, 9.0, 9.0);
        let u = identity_solution();
        let rep = ito_consistency_check(
            &g,
            &drift,
            &u,
            &[0.0],
            &Region::All,
            1.0,
            &[20, 40],
            50,
            5,
        )
        .unwrap();
        for d in &rep.defects {
            assert!(*d < 1e-10, "defect {d}");
        }
    }

    #[test]
    fn zero_solution_has_zero_defect() {
        let g = euclidean(1);
        let drift = DriftSpec::zero(1, 9.0, 9.0);
        let grid = Arc::new(
            SpaceTimeGrid::new(1.0, 5, SpatialGrid::cube(1, 50.0, 11), 0.5).unwrap(),
        );
        let u = PdeSolution {
            components: vec![GridField::zeros(grid)],
            residual_norm: 0.0,
            iterations: 0,
            lambda: 0.0,
            grad_sup: 0.0,
        };
        let rep = ito_consistency_check(
            &g,
            &drift,
            &u,
            &[0.0],
            &Region::All,
            1.0,
            &[10, 20],
            20,
            7,
        )
        .unwrap();
        assert!(rep.defects.iter().all(|d| *d == 0.0));
        assert!(rep.verdict.passed());
    }

    #[test]
    fn region_must_be_covered() {
        let g = euclidean(1);
        let drift = DriftSpec::zero(1, 9.0, 9.0);
        let grid = Arc::new(
            SpaceTimeGrid::new(1.0, 5, SpatialGrid::cube(1, 1.0, 11), 0.2).unwrap(),
        );
        let u = PdeSolution {
            components: vec![GridField::zeros(grid)],
            residual_norm: 0.0,
            iterations: 0,
            lambda: 0.0,
            grad_sup: 0.0,
        };
        let region = Region::Ball {
            center: vec![0.0],
            radius: 5.0,
        };
        assert!(ito_consistency_check(
            &g, &drift, &u, &[0.0], &region, 1.0, &[10, 20], 10, 7
        )
        .is_err());
    }
}

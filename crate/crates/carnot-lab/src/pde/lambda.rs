//! Damping selection: double λ from 1 until every grid sup of `Z_I u`
//! (|I| ≤ r) falls below ε and the Euclidean gradient sup is ≤ ½ — the
//! bounds the diffeomorphism construction needs.

use super::{solve_kolmogorov, PdeSolution, SolverOptions};
use crate::error::{Error, Result};
use crate::fields::{derivative_sups, DriftSpec, GridField};
use crate::group::CarnotGroupSpec;

pub const MAX_LAMBDA: f64 = (1u64 << 20) as f64;

/// One rung of the doubling ladder.
#[derive(Clone, Debug, serde::Serialize)]
pub struct LambdaLadderRecord {
    pub lambda: f64,
    pub grad_sup: f64,
    pub max_deriv_sup: f64,
    pub residual: f64,
    pub iterations: usize,
    pub accepted: bool,
}

/// Returns the first `(λ, solution)` on the doubling ladder satisfying both
/// bounds; the returned solution certifies `grad_sup ≤ ½` by construction.
pub fn select_lambda(
    group: &CarnotGroupSpec,
    drift: &DriftSpec,
    f: &[GridField],
    epsilon: f64,
    opts: &SolverOptions,
) -> Result<(f64, PdeSolution)> {
    let (lambda, sol, _) = select_lambda_traced(group, drift, f, epsilon, opts)?;
    Ok((lambda, sol))
}

/// Same, also reporting every rung tried.
pub fn select_lambda_traced(
    group: &CarnotGroupSpec,
    drift: &DriftSpec,
    f: &[GridField],
    epsilon: f64,
    opts: &SolverOptions,
) -> Result<(f64, PdeSolution, Vec<LambdaLadderRecord>)> {
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
    }
    let mut lambda = 1.0f64;
    let mut ladder = Vec::new();
    let mut last_sups = Vec::new();
    let mut last_grad = f64::INFINITY;
    while lambda <= MAX_LAMBDA {
        let sol = solve_kolmogorov(group, drift, f, lambda, opts)?;
        let mut sup_levels: Vec<f64> = Vec::new();
        for comp in &sol.components {
            for (idx, sup) in derivative_sups(group, comp, group.step()) {
                let slot = idx.len();
                if sup_levels.len() <= slot {
                    sup_levels.resize(slot + 1, 0.0);
                }
                sup_levels[slot] = sup_levels[slot].max(sup);
            }
        }
        let worst = sup_levels.iter().cloned().fold(0.0f64, f64::max);
        let accepted = worst <= epsilon && sol.grad_sup <= 0.5;
        ladder.push(LambdaLadderRecord {
            lambda,
            grad_sup: sol.grad_sup,
            max_deriv_sup: worst,
            residual: sol.residual_norm,
            iterations: sol.iterations,
            accepted,
        });
        if accepted {
            return Ok((lambda, sol, ladder));
        }
        last_sups = sup_levels;
        last_grad = sol.grad_sup;
        lambda *= 2.0;
    }
    Err(Error::LambdaSearchFailed {
        max_lambda: MAX_LAMBDA,
        sup_levels: last_sups,
        grad_sup: last_grad,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{SpaceTimeGrid, SpatialGrid};
    use crate::group::euclidean;
    use std::sync::Arc;

    #[test]
    fn trivial_case_selects_lambda_one() {
        let g = euclidean(1);
        let grid = Arc::new(
            SpaceTimeGrid::new(0.5, 5, SpatialGrid::cube(1, 2.0, 17), 0.25).unwrap(),
        );
        let f = vec![GridField::zeros(grid)];
        let drift = DriftSpec::zero(1, 9.0, 9.0);
        let (lambda, sol) =
            select_lambda(&g, &drift, &f, 0.1, &SolverOptions::default()).unwrap();
        assert_eq!(lambda, 1.0);
        assert_eq!(sol.grad_sup, 0.0);
    }

    #[test]
    fn epsilon_must_be_positive() {
        let g = euclidean(1);
        let grid = Arc::new(
            SpaceTimeGrid::new(0.5, 5, SpatialGrid::cube(1, 2.0, 9), 0.25).unwrap(),
        );
        let f = vec![GridField::zeros(grid)];
        let drift = DriftSpec::zero(1, 9.0, 9.0);
        assert!(select_lambda(&g, &drift, &f, 0.0, &SolverOptions::default()).is_err());
    }
}

//! Krylov occupation estimates: the expected integral of a nonnegative field
//! along stopped paths against `(t-s)^{1-(2/q+Q/p)} ‖f‖_{L^{q/2}L^{p/2}}`.
//! The constant is non-explicit, so the check is ratio stability under
//! doubling the ensemble.

use super::PathEnsemble;
use crate::error::{Error, Result};
use crate::fields::{mixed_norm, GridField};
use crate::group::CarnotGroupSpec;
use crate::report::{KrylovReport, Verdict};

/// Mean over paths of the left Riemann sum of `f(r, X_r)` over grid times in
/// `[s∧τ, t∧τ)`.
pub(crate) fn occupation_estimate(
    ensemble: &PathEnsemble,
    f: &GridField,
    s: f64,
    t: f64,
) -> f64 {
    let mut acc = 0.0;
    for traj in &ensemble.trajectories {
        let dt = traj.dt;
        let k_lo = (s / dt).ceil() as usize;
        let k_hi = ((t / dt).ceil() as usize).min(traj.tau_index);
        let mut path_acc = 0.0;
        for k in k_lo..k_hi {
            path_acc += f.eval(dt * k as f64, traj.state(k)) * dt;
        }
        acc += path_acc;
    }
    acc / ensemble.trajectories.len() as f64
}

/// Checks `E[∫_{s∧τ}^{t∧τ} f] ≤ C (t-s)^{1-(2/q+Q/p)} ‖f‖_{q/2,p/2}` over a
/// grid of (s,t) pairs; passes when the max ratio moves < `drift_tolerance`
/// between the base and the doubled ensemble.
pub fn krylov_check(
    group: &CarnotGroupSpec,
    base: &PathEnsemble,
    doubled: &PathEnsemble,
    f: &GridField,
    p: f64,
    q: f64,
    pairs: &[(f64, f64)],
    drift_tolerance: f64,
) -> Result<KrylovReport> {
    if base.trajectories.is_empty() || doubled.trajectories.is_empty() {
        return Err(Error::Contract("empty ensemble".into()));
    }
    if pairs.is_empty() {
        return Err(Error::Contract("no (s,t) pairs".into()));
    }
    if f.values().iter().any(|v| *v < 0.0) {
        return Err(Error::Contract("f must be nonnegative".into()));
    }
    let exponent = 1.0 - (2.0 / q + group.homogeneous_dim() as f64 / p);
    let f_norm = mixed_norm(f, q / 2.0, p / 2.0)?;
    if f_norm == 0.0 {
        // f ≡ 0: all ratios are zero.
        return Ok(KrylovReport {
            pairs: pairs.to_vec(),
            ratios_base: vec![0.0; pairs.len()],
            ratios_doubled: vec![0.0; pairs.len()],
            max_ratio_base: 0.0,
            max_ratio_doubled: 0.0,
            relative_drift: 0.0,
            drift_tolerance,
            verdict: Verdict::Pass,
        });
    }
    let mut ratios_base = Vec::with_capacity(pairs.len());
    let mut ratios_doubled = Vec::with_capacity(pairs.len());
    for &(s, t) in pairs {
        if !(s < t) {
            return Err(Error::Contract(format!("need s < t, got ({s}, {t})")));
        }
        let rhs = (t - s).powf(exponent) * f_norm;
        ratios_base.push(occupation_estimate(base, f, s, t) / rhs);
        ratios_doubled.push(occupation_estimate(doubled, f, s, t) / rhs);
    }
    let max_ratio_base = ratios_base.iter().cloned().fold(0.0f64, f64::max);
    let max_ratio_doubled = ratios_doubled.iter().cloned().fold(0.0f64, f64::max);
    let relative_drift = if max_ratio_base > 0.0 {
        (max_ratio_doubled - max_ratio_base).abs() / max_ratio_base
    } else {
        0.0
    };
    Ok(KrylovReport {
        pairs: pairs.to_vec(),
        ratios_base,
        ratios_doubled,
        max_ratio_base,
        max_ratio_doubled,
        relative_drift,
        drift_tolerance,
        verdict: Verdict::from_bool(relative_drift < drift_tolerance),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{DriftSpec, GridField, SpaceTimeGrid, SpatialGrid};
    use crate::group::heisenberg1;
    use crate::sde::{integrate_ensemble, Region, Scheme};
    use std::sync::Arc;

    fn small_ensemble(n_paths: usize, offset: u64) -> crate::sde::PathEnsemble {
        let g = heisenberg1();
        let drift = DriftSpec::zero(2, 9.0, 9.0);
        integrate_ensemble(
            &g,
            &drift,
            &[0.0; 3],
            1.0,
            100,
            n_paths,
            31,
            offset,
            &Region::All,
            Scheme::LieExp,
        )
        .unwrap()
    }

    fn ones_field() -> GridField {
        let grid = Arc::new(
            SpaceTimeGrid::new(1.0, 5, SpatialGrid::cube(3, 6.0, 9), 0.5).unwrap(),
        );
        GridField::from_fn(grid, |_, _| 1.0)
    }

    #[test]
    fn zero_f_gives_zero_ratios() {
        let g = heisenberg1();
        let base = small_ensemble(200, 0);
        let doubled = small_ensemble(400, 1000);
        let grid = base_grid();
        let f = GridField::zeros(grid);
        let rep =
            krylov_check(&g, &base, &doubled, &f, 9.0, 9.0, &[(0.0, 0.5)], 0.25).unwrap();
        assert_eq!(rep.max_ratio_base, 0.0);
        assert!(rep.verdict.passed());
    }

    fn base_grid() -> Arc<SpaceTimeGrid> {
        Arc::new(SpaceTimeGrid::new(1.0, 5, SpatialGrid::cube(3, 6.0, 9), 0.5).unwrap())
    }

    #[test]
    fn occupation_of_ones_is_time_length() {
        // f ≡ 1 inside a huge box, no stopping: E ∫_s^t 1 = t - s exactly.
        let base = small_ensemble(50, 0);
        let f = ones_field();
        let est = occupation_estimate(&base, &f, 0.0, 0.5);
        assert!((est - 0.5).abs() < 0.02, "est {est}");
    }

    #[test]
    fn nested_intervals_are_monotone() {
        let base = small_ensemble(100, 0);
        let f = ones_field();
        let a = occupation_estimate(&base, &f, 0.1, 0.4);
        let b = occupation_estimate(&base, &f, 0.1, 0.8);
        assert!(a <= b);
    }

    #[test]
    fn rejects_negative_f() {
        let g = heisenberg1();
        let base = small_ensemble(10, 0);
        let f = GridField::from_fn(base_grid(), |_, _| -1.0);
        assert!(krylov_check(&g, &base, &base, &f, 9.0, 9.0, &[(0.0, 0.5)], 0.25).is_err());
    }

    #[test]
    fn rejects_empty_ensemble() {
        let g = heisenberg1();
        let empty = crate::sde::PathEnsemble {
            trajectories: vec![],
            scheme: Scheme::LieExp,
            seed: 0,
            stream_offset: 0,
        };
        let f = ones_field();
        assert!(krylov_check(&g, &empty, &empty, &f, 9.0, 9.0, &[(0.0, 0.5)], 0.25).is_err());
    }
}

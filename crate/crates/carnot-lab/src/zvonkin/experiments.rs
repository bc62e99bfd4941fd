//! The two pathwise experiments: conjugation consistency (Y_t vs Φ(t,X_t)
//! from the same driver, defect shrinking with the step) and the strong-
//! uniqueness shadow (two schemes on the same path converge; independent
//! drivers — the mandatory negative control — do not).

use super::conjugate::ConjugatedSde;
use super::ZvonkinMap;
use crate::error::{Error, Result};
use crate::fields::DriftSpec;
use crate::group::CarnotGroupSpec;
use crate::report::{RefinementReport, Verdict};
use crate::sde::{integrate, integrate_ito, sample_driver, Region, Scheme};
use crate::stats::log_log_slope;
use rayon::prelude::*;

/// Integrates X (original SDE, lie_exp) and Y (conjugated SDE, raw Itô
/// Euler-Maruyama) from the same driver at each step count and reports
/// `E[sup_{t≤τ} |Φ(t,X_t) - Y_t|]` per level; passes when the log-log slope
/// against the step is ≥ `min_slope`.
#[allow(clippy::too_many_arguments)]
pub fn conjugation_consistency(
    map: &ZvonkinMap,
    group: &CarnotGroupSpec,
    drift: &DriftSpec,
    x0: &[f64],
    step_counts: &[usize],
    n_paths: usize,
    seed: u64,
    min_slope: f64,
    scenario: &str,
) -> Result<RefinementReport> {
    if step_counts.len() < 2 {
        return Err(Error::Contract("need at least two step sizes".into()));
    }
    if !map.omega.contains(x0) {
        return Err(Error::Domain("x0 outside the certified ball".into()));
    }
    let finest = *step_counts.iter().max().unwrap();
    for &s in step_counts {
        if finest % s != 0 {
            return Err(Error::Contract(
                "step counts must divide the finest level".into(),
            ));
        }
    }
    let horizon = map.solution.components[0].grid().horizon;
    let m = group.horizontal_dim();
    let mut y0 = Vec::new();
    map.apply(0.0, x0, &mut y0);

    let mut levels = Vec::with_capacity(step_counts.len());
    let mut defects = Vec::with_capacity(step_counts.len());
    for &steps in step_counts {
        let factor = finest / steps;
        let sups: Vec<f64> = (0..n_paths)
            .into_par_iter()
            .map(|p| -> Result<f64> {
                let fine = sample_driver(m, horizon, finest, seed, p as u64);
                let driver = fine.coarsen(factor)?;
                let x_traj = integrate(group, drift, x0, &driver, &map.omega, Scheme::LieExp)?;
                let sde = ConjugatedSde { map, group };
                let y_traj = integrate_ito(&sde, &y0, &driver, &Region::All)?;
                let alive = x_traj.tau_index.min(y_traj.tau_index);
                let mut sup = 0.0f64;
                let mut phi = Vec::new();
                for k in 0..=alive {
                    let t = driver.dt * k as f64;
                    map.apply(t, x_traj.state(k), &mut phi);
                    let d: f64 = phi
                        .iter()
                        .zip(y_traj.state(k))
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt();
                    sup = sup.max(d);
                }
                Ok(sup)
            })
            .collect::<Result<Vec<f64>>>()?;
        levels.push(horizon / steps as f64);
        defects.push(sups.iter().sum::<f64>() / n_paths as f64);
    }
    let slope = if defects.iter().all(|d| *d > 0.0) {
        log_log_slope(&levels, &defects)
    } else {
        min_slope // exact agreement at every level counts as a pass
    };
    Ok(RefinementReport {
        scenario: scenario.into(),
        levels,
        defects,
        slope,
        verdict: Verdict::from_bool(slope >= min_slope),
        control_defect: None,
        threshold: Some(min_slope),
        notes: "E[sup|Φ(t,X)-Y|] vs SDE step; slope is the strong-order floor".into(),
    })
}

/// Same-driver difference of two schemes across step refinements, both
/// stopped at the exit from Ω, plus the independent-driver negative control
/// at the finest level. Passes iff the defect decreases monotonically, the
/// finest level is below `tol_frac·diam(Ω)`, and the control stays above
/// `control_frac·diam(Ω)`.
#[allow(clippy::too_many_arguments)]
pub fn uniqueness_experiment(
    group: &CarnotGroupSpec,
    drift: &DriftSpec,
    x0: &[f64],
    omega: &Region,
    horizon: f64,
    step_counts: &[usize],
    n_paths: usize,
    seed: u64,
    tol_frac: f64,
    control_frac: f64,
    scenario: &str,
) -> Result<RefinementReport> {
    if step_counts.len() < 2 {
        return Err(Error::Contract("need at least two refinement levels".into()));
    }
    let diam = omega.diameter();
    if !diam.is_finite() {
        return Err(Error::Contract(
            "uniqueness experiment needs a bounded region".into(),
        ));
    }
    let m = group.horizontal_dim();

    let same_driver_defect = |steps: usize, scheme_b: Scheme, independent: bool| -> Result<f64> {
        let sups: Vec<f64> = (0..n_paths)
            .into_par_iter()
            .map(|p| -> Result<f64> {
                let d1 = sample_driver(m, horizon, steps, seed, p as u64);
                let d2 = if independent {
                    sample_driver(m, horizon, steps, seed, (p as u64) + (1 << 40))
                } else {
                    d1.clone()
                };
                let x1 = integrate(group, drift, x0, &d1, omega, Scheme::LieExp)?;
                let x2 = integrate(group, drift, x0, &d2, omega, scheme_b)?;
                let alive = x1.tau_index.min(x2.tau_index);
                let mut sup = 0.0f64;
                for k in 0..=alive {
                    let d: f64 = x1
                        .state(k)
                        .iter()
                        .zip(x2.state(k))
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt();
                    sup = sup.max(d);
                }
                Ok(sup)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(sups.iter().sum::<f64>() / n_paths as f64)
    };

    let mut levels = Vec::with_capacity(step_counts.len());
    let mut defects = Vec::with_capacity(step_counts.len());
    for &steps in step_counts {
        levels.push(horizon / steps as f64);
        defects.push(same_driver_defect(steps, Scheme::EulerHeun, false)?);
    }
    let finest_steps = *step_counts.iter().max().unwrap();
    let control = same_driver_defect(finest_steps, Scheme::LieExp, true)?;

    let decreasing = defects.windows(2).all(|w| w[1] < w[0]);
    let finest = *defects.last().unwrap();
    let pass = decreasing && finest < tol_frac * diam && control > control_frac * diam;
    let slope = if defects.iter().all(|d| *d > 0.0) {
        log_log_slope(&levels, &defects)
    } else {
        1.0
    };
    Ok(RefinementReport {
        scenario: scenario.into(),
        levels,
        defects,
        slope,
        verdict: Verdict::from_bool(pass),
        control_defect: Some(control),
        threshold: Some(tol_frac * diam),
        notes: format!(
            "same-driver E[sup|X1-X2|] must fall below {:.3e}; control must stay above {:.3e}",
            tol_frac * diam,
            control_frac * diam
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{DriftComponent, DriftExpr};
    use crate::group::euclidean;

    #[test]
    fn classical_lipschitz_uniqueness_on_euclidean() {
        // Bounded smooth drift on R: classical pathwise uniqueness; the
        // scheme difference decays and the control stays macroscopic.
        let g = euclidean(1);
        let drift = DriftSpec::new(
            vec![DriftComponent::Expr(DriftExpr::Bump {
                amplitude: 0.8,
                radius: 1.5,
            })],
            9.0,
            9.0,
        );
        let omega = Region::Ball {
            center: vec![0.0],
            radius: 1.2,
        };
        let rep = uniqueness_experiment(
            &g,
            &drift,
            &[0.0],
            &omega,
            0.5,
            &[50, 100, 200],
            400,
            42,
            1e-2,
            0.1,
            "euclidean-smooth",
        )
        .unwrap();
        assert!(rep.verdict.passed(), "{rep:?}");
        assert!(rep.slope > 0.5, "slope {}", rep.slope);
    }
}

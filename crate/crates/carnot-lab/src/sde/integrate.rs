//! The integrators. Two horizontal schemes for the Stratonovich SDE (the
//! drift lives in the Z-frame per the admissibility condition), and a raw
//! Euler-Maruyama mode for the Itô conjugated SDE whose coefficients are
//! arbitrary Euclidean fields.

use super::{BrownianDriver, Region, Scheme, Trajectory};
use crate::error::{Error, Result};
use crate::fields::DriftSpec;
use crate::group::CarnotGroupSpec;

/// Integrates the horizontal SDE from `x0`, stopping at the first grid time
/// outside `region` (states frozen exactly afterward). For `b = 0` and the
/// `LieExp` scheme this is horizontal Brownian motion.
pub fn integrate(
    group: &CarnotGroupSpec,
    drift: &DriftSpec,
    x0: &[f64],
    driver: &BrownianDriver,
    region: &Region,
    scheme: Scheme,
) -> Result<Trajectory> {
    let n = group.dim();
    let m = group.horizontal_dim();
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x0.len(),
        });
    }
    if driver.m != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: driver.m,
        });
    }
    if !region.contains(x0) {
        return Err(Error::Domain("x0 is outside the stopping region".into()));
    }
    let dt = driver.dt;
    let mut states = Vec::with_capacity(driver.n_steps + 1);
    states.push(x0.to_vec());
    let mut tau_index = driver.n_steps;
    let mut exited = false;

    let mut incr = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut beuc = Vec::with_capacity(n);
    let mut beuc_pred = Vec::with_capacity(n);
    let mut field = Vec::with_capacity(n);
    let mut field_pred = Vec::with_capacity(n);
    let mut pred = vec![0.0; n];

    for k in 0..driver.n_steps {
        let cur = states[k].clone();
        if exited {
            states.push(cur);
            continue;
        }
        let t = dt * k as f64;
        let db = driver.step(k);
        match scheme {
            Scheme::LieExp => {
                // exp_G of the first-layer element Σ (ΔB^i + b^i Δt) e_i is
                // that element itself in exponential coordinates.
                for v in incr.iter_mut() {
                    *v = 0.0;
                }
                for i in 0..m {
                    incr[i] = db[i] + drift.component(group, i, t, &cur) * dt;
                }
                group.compose_into(&cur, &incr, &mut next);
            }
            Scheme::EulerHeun => {
                // Predictor.
                drift.euclidean_vector_into(group, t, &cur, &mut beuc);
                for j in 0..n {
                    pred[j] = cur[j] + beuc[j] * dt;
                }
                for i in 0..m {
                    group.left_invariant_field_into(&cur, i, &mut field);
                    for j in 0..n {
                        pred[j] += field[j] * db[i];
                    }
                }
                // Corrector: trapezoidal average of drift and fields.
                drift.euclidean_vector_into(group, t + dt, &pred, &mut beuc_pred);
                for j in 0..n {
                    next[j] = cur[j] + 0.5 * (beuc[j] + beuc_pred[j]) * dt;
                }
                for i in 0..m {
                    group.left_invariant_field_into(&cur, i, &mut field);
                    group.left_invariant_field_into(&pred, i, &mut field_pred);
                    for j in 0..n {
                        next[j] += 0.5 * (field[j] + field_pred[j]) * db[i];
                    }
                }
            }
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Estimation(format!(
                "integration produced a non-finite state at step {k}"
            )));
        }
        states.push(next.clone());
        if !region.contains(&next) {
            tau_index = k + 1;
            exited = true;
        }
    }
    Ok(Trajectory {
        dt,
        states,
        tau_index,
    })
}

/// Coefficients of a generic Itô SDE `dY = b̃ dt + Σ σ̃_i dB^i` (used for
/// the conjugated equation, whose drift is a raw Euclidean vector field).
pub trait ItoSde {
    /// Fills the drift vector and the m diffusion columns at `(t, y)`.
    /// Errors propagate (e.g. when y leaves the certified image domain).
    fn coefficients(
        &self,
        t: f64,
        y: &[f64],
        b: &mut Vec<f64>,
        sigma: &mut Vec<Vec<f64>>,
    ) -> Result<()>;

    fn dim(&self) -> usize;
    fn noise_dim(&self) -> usize;
}

/// Euler-Maruyama for an [`ItoSde`]. The path freezes at the first grid time
/// outside the region, or at the first coefficient failure (treated as an
/// exit one step earlier to keep the trajectory usable).
pub fn integrate_ito(
    sde: &dyn ItoSde,
    y0: &[f64],
    driver: &BrownianDriver,
    region: &Region,
) -> Result<Trajectory> {
    let n = sde.dim();
    let m = sde.noise_dim();
    if driver.m != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: driver.m,
        });
    }
    if !region.contains(y0) {
        return Err(Error::Domain("y0 is outside the stopping region".into()));
    }
    let dt = driver.dt;
    let mut states = Vec::with_capacity(driver.n_steps + 1);
    states.push(y0.to_vec());
    let mut tau_index = driver.n_steps;
    let mut exited = false;
    let mut b = Vec::with_capacity(n);
    let mut sigma: Vec<Vec<f64>> = Vec::new();
    let mut next = vec![0.0; n];

    for k in 0..driver.n_steps {
        let cur = states[k].clone();
        if exited {
            states.push(cur);
            continue;
        }
        let t = dt * k as f64;
        if sde.coefficients(t, &cur, &mut b, &mut sigma).is_err() {
            // Coefficient unavailable (left the certified domain): freeze.
            tau_index = k;
            exited = true;
            states.push(cur);
            continue;
        }
        let db = driver.step(k);
        for j in 0..n {
            next[j] = cur[j] + b[j] * dt;
        }
        for (i, col) in sigma.iter().enumerate() {
            for j in 0..n {
                next[j] += col[j] * db[i];
            }
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Estimation(format!(
                "Ito integration produced a non-finite state at step {k}"
            )));
        }
        states.push(next.clone());
        if !region.contains(&next) {
            tau_index = k + 1;
            exited = true;
        }
    }
    Ok(Trajectory {
        dt,
        states,
        tau_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::DriftSpec;
    use crate::group::{euclidean, heisenberg1};
    use crate::sde::sample_driver;
    use crate::stats::mean_se;

    #[test]
    fn additive_case_is_exact_under_lie_exp() {
        let g = euclidean(2);
        let drift = DriftSpec::zero(2, 9.0, 9.0);
        let driver = sample_driver(2, 1.0, 200, 4, 0);
        let x0 = [0.3, -0.8];
        let traj = integrate(&g, &drift, &x0, &driver, &Region::All, Scheme::LieExp).unwrap();
        // X_t = x0 + B_t exactly.
        let mut b_sum = [0.0; 2];
        for k in 0..driver.n_steps {
            let db = driver.step(k);
            b_sum[0] += db[0];
            b_sum[1] += db[1];
        }
        let last = traj.last();
        assert!((last[0] - (x0[0] + b_sum[0])).abs() < 1e-12);
        assert!((last[1] - (x0[1] + b_sum[1])).abs() < 1e-12);
        assert_eq!(traj.tau_index, driver.n_steps);
    }

    #[test]
    fn heisenberg_third_coordinate_is_levy_area() {
        let g = heisenberg1();
        let drift = DriftSpec::zero(2, 9.0, 9.0);
        let driver = sample_driver(2, 1.0, 300, 8, 2);
        let traj = integrate(
            &g,
            &drift,
            &[0.0; 3],
            &driver,
            &Region::All,
            Scheme::LieExp,
        )
        .unwrap();
        // z_T = ½ Σ (x_k Δy_k - y_k Δx_k) exactly for the group update.
        let mut area = 0.0;
        for k in 0..driver.n_steps {
            let s = traj.state(k);
            let db = driver.step(k);
            area += 0.5 * (s[0] * db[1] - s[1] * db[0]);
        }
        assert!((traj.last()[2] - area).abs() < 1e-12);
    }

    #[test]
    fn mean_levy_area_vanishes() {
        let g = heisenberg1();
        let drift = DriftSpec::zero(2, 9.0, 9.0);
        let ens = crate::sde::integrate_ensemble(
            &g,
            &drift,
            &[0.0; 3],
            1.0,
            60,
            4000,
            77,
            0,
            &Region::All,
            Scheme::LieExp,
        )
        .unwrap();
        let z: Vec<f64> = ens.trajectories.iter().map(|t| t.last()[2]).collect();
        let (mean, se) = mean_se(&z);
        assert!(mean.abs() < 3.0 * se, "E z_T = {mean} (se {se})");
    }

    #[test]
    fn all_region_never_stops() {
        let g = heisenberg1();
        let drift = DriftSpec::zero(2, 9.0, 9.0);
        let driver = sample_driver(2, 0.5, 100, 12, 0);
        let traj = integrate(
            &g,
            &drift,
            &[0.0; 3],
            &driver,
            &Region::All,
            Scheme::EulerHeun,
        )
        .unwrap();
        assert_eq!(traj.tau(), 0.5);
        assert!(!traj.exited());
    }

    #[test]
    fn frozen_after_exit_exactly() {
        let g = euclidean(1);
        let drift = DriftSpec::zero(1, 9.0, 9.0);
        let driver = sample_driver(1, 4.0, 400, 21, 3);
        let region = Region::Ball {
            center: vec![0.0],
            radius: 0.3,
        };
        let traj = integrate(&g, &drift, &[0.0], &driver, &region, Scheme::LieExp).unwrap();
        assert!(traj.exited(), "path should leave a tiny ball over T=4");
        let frozen = traj.state(traj.tau_index).to_vec();
        for k in traj.tau_index..traj.states.len() {
            assert_eq!(traj.state(k), frozen.as_slice());
        }
    }

    #[test]
    fn x0_must_be_inside() {
        let g = euclidean(1);
        let drift = DriftSpec::zero(1, 9.0, 9.0);
        let driver = sample_driver(1, 1.0, 10, 0, 0);
        let region = Region::Ball {
            center: vec![0.0],
            radius: 0.5,
        };
        assert!(integrate(&g, &drift, &[1.0], &driver, &region, Scheme::LieExp).is_err());
    }
}

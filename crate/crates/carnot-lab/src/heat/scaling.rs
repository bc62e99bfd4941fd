//! Power-law checks on kernel norms over a time grid:
//! `‖f·Z_I p_t‖_{L^p} ~ t^{Q/2p + (k_f-(Q+|I|))/2}` and the convolution
//! bound `‖f∗Z_I p_t‖_∞ ≲ t^{-(Q/2p+1/2)}`.

use super::kde::{kernel_on_grid, KernelGridEstimate};
use super::McParams;
use crate::error::{Error, Result};
use crate::fields::{group_convolve_point, spatial_lp, GridField, SpatialGrid};
use crate::group::CarnotGroupSpec;
use crate::report::{ScalingReport, Verdict};
use crate::stats::log_log_slope;

#[derive(Clone, Debug)]
pub struct KernelScalingConfig {
    pub times: Vec<f64>,
    /// Box at t = 1; each measurement grid is the dilation `D(√t)` of it
    /// (same node counts), so the kernel resolution is scale-invariant and
    /// the fitted slope is free of t-dependent discretization bias.
    pub space: SpatialGrid,
    pub mc: McParams,
    pub bandwidth_scale: f64,
    pub tolerance: f64,
}

impl KernelScalingConfig {
    fn grid_at(&self, group: &CarnotGroupSpec, t: f64) -> SpatialGrid {
        let lam = t.sqrt();
        let bounds = self
            .space
            .bounds
            .iter()
            .zip(group.weights())
            .map(|(b, &w)| b * lam.powi(w as i32))
            .collect();
        SpatialGrid {
            bounds,
            n_x: self.space.n_x.clone(),
        }
    }
}

fn apply_multi_index(
    group: &CarnotGroupSpec,
    estimate: &KernelGridEstimate,
    multi_index: &[usize],
) -> GridField {
    let mut field = estimate.field.clone();
    // Z_I = Z_{i_1}···Z_{i_s} applied rightmost first.
    for &i in multi_index.iter().rev() {
        field = crate::fields::horizontal_derivative(group, &field, i, field.grid().fd_step);
    }
    field
}

/// Fits the t-exponent of `‖f·Z_I p_t‖_{L^p}` on the config's time grid and
/// compares it (two-sidedly) against `Q/2p + (k_f - (Q+|I|))/2`.
pub fn kernel_lp_scaling_check(
    group: &CarnotGroupSpec,
    p_exp: f64,
    multi_index: &[usize],
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    f_degree: f64,
    cfg: &KernelScalingConfig,
) -> Result<ScalingReport> {
    if !(p_exp >= 1.0) || p_exp.is_infinite() {
        return Err(Error::Domain("need 1 ≤ p < ∞".into()));
    }
    if cfg.times.len() < 2 {
        return Err(Error::Contract("need at least two times".into()));
    }
    let big_q = group.homogeneous_dim() as f64;
    let expected =
        big_q / (2.0 * p_exp) + (f_degree - (big_q + multi_index.len() as f64)) / 2.0;

    let mut norms = Vec::with_capacity(cfg.times.len());
    for (ti, &t) in cfg.times.iter().enumerate() {
        let mc = McParams {
            seed: cfg.mc.seed.wrapping_add(ti as u64),
            ..cfg.mc
        };
        let space = cfg.grid_at(group, t);
        let est = kernel_on_grid(group, t, &space, &mc, cfg.bandwidth_scale)?;
        let mut field = apply_multi_index(group, &est, multi_index);
        // Multiply by f on the nodes.
        let space = field.grid().space.clone();
        for node in 0..space.len() {
            let x = space.node(node);
            let fv = f(&x);
            field.values_mut()[(0, node)] *= fv;
            field.values_mut()[(1, node)] *= fv;
        }
        norms.push(spatial_lp(&field, 0, p_exp));
    }
    if norms.iter().any(|n| !(*n > 0.0)) {
        return Err(Error::Estimation(format!(
            "kernel norm vanished on the time grid: {norms:?}"
        )));
    }
    let slope = log_log_slope(&cfg.times, &norms);
    Ok(ScalingReport {
        abscissae: cfg.times.clone(),
        values: norms,
        fitted_slope: slope,
        expected_slope: expected,
        tolerance: cfg.tolerance,
        one_sided: false,
        verdict: Verdict::from_bool((slope - expected).abs() <= cfg.tolerance),
    })
}

/// Fits the t-exponent of `‖f ∗ Z_I p_t‖_∞` (sup over a probe lattice) and
/// checks the one-sided bound: the exponent must not fall below
/// `-(Q/2p + ½) - tolerance`.
pub fn conv_linf_scaling_check(
    group: &CarnotGroupSpec,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    multi_index: &[usize],
    p_exp: f64,
    probes: &SpatialGrid,
    cfg: &KernelScalingConfig,
) -> Result<ScalingReport> {
    if multi_index.is_empty() {
        return Err(Error::Domain("need |I| = a ≥ 1".into()));
    }
    if !(p_exp >= 1.0) || p_exp.is_infinite() {
        return Err(Error::Domain("need 1 ≤ p < ∞".into()));
    }
    let big_q = group.homogeneous_dim() as f64;
    let expected = -(big_q / (2.0 * p_exp) + 0.5);

    let mut sups = Vec::with_capacity(cfg.times.len());
    for (ti, &t) in cfg.times.iter().enumerate() {
        let mc = McParams {
            seed: cfg.mc.seed.wrapping_add(1000 + ti as u64),
            ..cfg.mc
        };
        let space = cfg.grid_at(group, t);
        let est = kernel_on_grid(group, t, &space, &mc, cfg.bandwidth_scale)?;
        let kernel = apply_multi_index(group, &est, multi_index);
        let mut sup: f64 = 0.0;
        for node in 0..probes.len() {
            let x = probes.node(node);
            let v = group_convolve_point(group, &|y| f(y), &kernel, 0, &x);
            sup = sup.max(v.abs());
        }
        sups.push(sup);
    }
    if sups.iter().all(|s| *s == 0.0) {
        // f ≡ 0: vacuous pass.
        return Ok(ScalingReport {
            abscissae: cfg.times.clone(),
            values: sups,
            fitted_slope: 0.0,
            expected_slope: expected,
            tolerance: cfg.tolerance,
            one_sided: true,
            verdict: Verdict::Pass,
        });
    }
    if sups.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::Estimation(
            "convolution sup vanished on part of the time grid".into(),
        ));
    }
    let slope = log_log_slope(&cfg.times, &sups);
    Ok(ScalingReport {
        abscissae: cfg.times.clone(),
        values: sups,
        fitted_slope: slope,
        expected_slope: expected,
        tolerance: cfg.tolerance,
        one_sided: true,
        verdict: Verdict::from_bool(slope >= expected - cfg.tolerance),
    })
}

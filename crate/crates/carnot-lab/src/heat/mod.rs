//! The heat semigroup `P_t = e^{tL}` of the sub-Laplacian.
//!
//! The kernel `p(t,·)` solves `∂_t - L`; the horizontal Brownian motion has
//! generator `½L`, so `(P_t f)(x) = E[f(x ∘ W_{2t})]` — the time doubling
//! reconciles the two conventions once, here. On Euclidean specs an exact
//! Gaussian quadrature path replaces Monte Carlo.

mod envelope;
mod kde;
mod scaling;

pub use envelope::{envelope_check, EnvelopeSample, KernelEnvelope};
pub use kde::{
    kde_at_point, kernel_density_estimate, kernel_on_grid, KdeEstimate, KernelGridEstimate,
};
pub use scaling::{conv_linf_scaling_check, kernel_lp_scaling_check, KernelScalingConfig};

use crate::error::{Error, Result};
use crate::group::CarnotGroupSpec;
use crate::rng::{fill_standard_normal, stream_rng};
use rayon::prelude::*;

/// Monte-Carlo controls for semigroup and kernel estimation.
#[derive(Clone, Copy, Debug)]
pub struct McParams {
    pub samples: usize,
    /// Walk resolution: steps per unit of process time.
    pub steps_per_unit_time: usize,
    pub seed: u64,
}

impl Default for McParams {
    fn default() -> Self {
        McParams {
            samples: 100_000,
            steps_per_unit_time: 200,
            seed: 0x1ab5_eed,
        }
    }
}

impl McParams {
    pub fn steps_for(&self, process_time: f64) -> usize {
        ((process_time * self.steps_per_unit_time as f64).ceil() as usize).max(20)
    }
}

/// Endpoint of one horizontal Brownian path started at `start`, run for
/// `process_time` with the given stream.
pub(crate) fn hbm_endpoint(
    group: &CarnotGroupSpec,
    start: &[f64],
    process_time: f64,
    n_steps: usize,
    seed: u64,
    stream: u64,
) -> Vec<f64> {
    let n = group.dim();
    let m = group.horizontal_dim();
    let dt = process_time / n_steps as f64;
    let sqrt_dt = dt.sqrt();
    let mut rng = stream_rng(seed, stream);
    let mut state = start.to_vec();
    let mut next = vec![0.0; n];
    let mut incr = vec![0.0; n];
    let mut gauss = vec![0.0; m];
    for _ in 0..n_steps {
        fill_standard_normal(&mut rng, &mut gauss);
        for k in 0..n {
            incr[k] = 0.0;
        }
        for i in 0..m {
            incr[i] = sqrt_dt * gauss[i];
        }
        group.compose_into(&state, &incr, &mut next);
        std::mem::swap(&mut state, &mut next);
    }
    state
}

/// Endpoint cloud of `mc.samples` independent horizontal Brownian paths at
/// process time `2t` started at the identity: samples of the density
/// `p(t,·)`. Deterministic in (seed, samples) and thread-count independent.
pub fn kernel_endpoints(group: &CarnotGroupSpec, t: f64, mc: &McParams) -> Result<Vec<Vec<f64>>> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("kernel time must be positive, got {t}")));
    }
    let process_time = 2.0 * t;
    let n_steps = mc.steps_for(process_time);
    let start = vec![0.0; group.dim()];
    Ok((0..mc.samples)
        .into_par_iter()
        .map(|k| hbm_endpoint(group, &start, process_time, n_steps, mc.seed, k as u64))
        .collect())
}

/// A Monte-Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// `(P_t f)(x)`: exact Gaussian quadrature on abelian specs, Monte Carlo
/// over horizontal Brownian endpoints elsewhere.
pub fn semigroup_apply(
    group: &CarnotGroupSpec,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    t: f64,
    x: &[f64],
    mc: &McParams,
) -> Result<Estimate> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("semigroup time must be positive, got {t}")));
    }
    if group.is_abelian() {
        return Ok(Estimate {
            value: euclidean_quadrature(group.dim(), f, t, x),
            std_error: 0.0,
            samples: 0,
        });
    }
    semigroup_apply_mc(group, f, t, x, mc)
}

/// The Monte-Carlo estimator unconditionally — on abelian groups this is
/// what gets checked against the exact quadrature path.
pub fn semigroup_apply_mc(
    group: &CarnotGroupSpec,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    t: f64,
    x: &[f64],
    mc: &McParams,
) -> Result<Estimate> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("semigroup time must be positive, got {t}")));
    }
    let process_time = 2.0 * t;
    let n_steps = mc.steps_for(process_time);
    let values: Vec<f64> = (0..mc.samples)
        .into_par_iter()
        .map(|k| {
            let end = hbm_endpoint(group, x, process_time, n_steps, mc.seed, k as u64);
            f(&end)
        })
        .collect();
    if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Estimation(format!(
            "f returned a non-finite value on sample {bad}"
        )));
    }
    let (mean, se) = crate::stats::mean_se(&values);
    Ok(Estimate {
        value: mean,
        std_error: se,
        samples: mc.samples,
    })
}

/// Tensor trapezoidal quadrature of `f` against the N(0, 2t·I) density; the
/// integrand decays like a Gaussian so the rule converges spectrally.
fn euclidean_quadrature(dim: usize, f: &dyn Fn(&[f64]) -> f64, t: f64, x: &[f64]) -> f64 {
    let sigma = (2.0 * t).sqrt();
    let half = 8.5 * sigma;
    let n = 129usize;
    let h = 2.0 * half / (n - 1) as f64;
    let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    let mut idx = vec![0usize; dim];
    let mut y = vec![0.0; dim];
    let mut acc = 0.0;
    loop {
        let mut w = 1.0;
        for j in 0..dim {
            let u = -half + idx[j] as f64 * h;
            y[j] = x[j] + u;
            let endpoint = idx[j] == 0 || idx[j] == n - 1;
            w *= norm * (-u * u / (2.0 * sigma * sigma)).exp() * if endpoint { 0.5 * h } else { h };
        }
        acc += w * f(&y);
        let mut j = dim;
        loop {
            if j == 0 {
                return acc;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < n {
                break;
            }
            idx[j] = 0;
        }
    }
}

/// The classical kernel of `∂_t - Δ` on R^d: `(4πt)^{-d/2} e^{-|x|²/4t}`.
pub fn euclidean_heat_kernel(dim: usize, t: f64, x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    (4.0 * std::f64::consts::PI * t).powf(-(dim as f64) / 2.0) * (-r2 / (4.0 * t)).exp()
}

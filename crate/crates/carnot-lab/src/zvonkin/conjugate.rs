//! The conjugated SDE `dY = b̃(t,Y)dt + Σ σ̃_i(t,Y)dB^i` (Itô form) with
//!
//!   `b̃(t,y) = [λu + ½ΣZ_i'Z_i](t, Φ⁻¹(t,y))`,
//!   `σ̃_i(t,y) = (Z_i + Z_iu)(t, Φ⁻¹(t,y))`,
//!
//! and the Lipschitz probe that makes the drift regularization measurable.

use super::ZvonkinMap;
use crate::error::Result;
use crate::group::CarnotGroupSpec;
use crate::report::{LipschitzReport, Verdict};
use crate::rng::{fill_standard_normal, stream_rng};
use crate::sde::ItoSde;

/// Evaluates the conjugated coefficients at (t, y ∈ Φ(t,Ω)); the inversion
/// failure propagates as an error.
pub fn conjugated_coeffs(
    map: &ZvonkinMap,
    group: &CarnotGroupSpec,
    t: f64,
    y: &[f64],
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let x = map.invert(t, y)?;
    Ok(conjugated_coeffs_at_preimage(map, group, t, &x))
}

/// Same, already at the preimage point x = Φ⁻¹(t,y); exact in x (no
/// inversion): used by the Lipschitz probe.
pub fn conjugated_coeffs_at_preimage(
    map: &ZvonkinMap,
    group: &CarnotGroupSpec,
    t: f64,
    x: &[f64],
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = group.dim();
    let m = group.horizontal_dim();
    let mut b = Vec::with_capacity(n);
    map.u_vector(t, x, &mut b);
    for v in b.iter_mut() {
        *v *= map.lambda();
    }
    for i in 0..m {
        let corr = group.field_self_derivative(i, x);
        for j in 0..n {
            b[j] += 0.5 * corr[j];
        }
    }
    let mut sigma = Vec::with_capacity(m);
    let mut z = Vec::with_capacity(n);
    let mut zu = Vec::with_capacity(n);
    for i in 0..m {
        group.left_invariant_field_into(x, i, &mut z);
        map.z_u_vector(i, t, x, &mut zu);
        sigma.push(z.iter().zip(&zu).map(|(a, b)| a + b).collect());
    }
    (b, sigma)
}

/// [`ItoSde`] adapter for the raw-Euclidean-drift integrator.
pub struct ConjugatedSde<'a> {
    pub map: &'a ZvonkinMap,
    pub group: &'a CarnotGroupSpec,
}

impl ItoSde for ConjugatedSde<'_> {
    fn coefficients(
        &self,
        t: f64,
        y: &[f64],
        b: &mut Vec<f64>,
        sigma: &mut Vec<Vec<f64>>,
    ) -> Result<()> {
        let (bb, ss) = conjugated_coeffs(self.map, self.group, t, y)?;
        *b = bb;
        *sigma = ss;
        Ok(())
    }

    fn dim(&self) -> usize {
        self.group.dim()
    }

    fn noise_dim(&self) -> usize {
        self.group.horizontal_dim()
    }
}

/// Estimates the Lipschitz constant of `b̃(t,·)` on Φ(t,Ω) from seeded
/// sample pairs in Ω, then re-runs with 4× the pairs; the estimate must be
/// finite and stable (growth below the tolerance).
pub fn lipschitz_probe(
    map: &ZvonkinMap,
    group: &CarnotGroupSpec,
    n_pairs: usize,
    seed: u64,
    growth_tolerance: f64,
) -> Result<LipschitzReport> {
    if n_pairs < 100 {
        return Err(crate::error::Error::Contract(
            "need at least 100 sample pairs".into(),
        ));
    }
    let estimate = probe_once(map, group, n_pairs, seed);
    let estimate_4x = probe_once(map, group, 4 * n_pairs, seed);
    let growth = if estimate > 0.0 {
        (estimate_4x - estimate).max(0.0) / estimate
    } else {
        0.0
    };
    Ok(LipschitzReport {
        estimate,
        estimate_4x,
        growth,
        growth_tolerance,
        n_pairs,
        verdict: Verdict::from_bool(
            estimate_4x.is_finite() && growth < growth_tolerance,
        ),
    })
}

fn probe_once(map: &ZvonkinMap, group: &CarnotGroupSpec, n_pairs: usize, seed: u64) -> f64 {
    let n = group.dim();
    let center = map.omega_center().to_vec();
    let radius = map.omega_radius();
    let grid = map.solution.components[0].grid().clone();
    let mut rng = stream_rng(seed, 99);
    let mut draw = vec![0.0; 2 * n + 1];
    let mut best: f64 = 0.0;
    let mut phi_a = Vec::new();
    let mut phi_b = Vec::new();
    for pair in 0..n_pairs {
        fill_standard_normal(&mut rng, &mut draw);
        let a = sample_in_ball(&center, radius, &draw[..n]);
        let b = sample_in_ball(&center, radius, &draw[n..2 * n]);
        let k = (pair % grid.n_t.max(1)).min(grid.n_t - 1);
        let t = grid.time(k);
        let (ba, _) = conjugated_coeffs_at_preimage(map, group, t, &a);
        let (bb, _) = conjugated_coeffs_at_preimage(map, group, t, &b);
        map.apply(t, &a, &mut phi_a);
        map.apply(t, &b, &mut phi_b);
        let dy: f64 = phi_a
            .iter()
            .zip(&phi_b)
            .map(|(u, v)| (u - v) * (u - v))
            .sum::<f64>()
            .sqrt();
        if dy < 1e-9 {
            continue;
        }
        let db: f64 = ba
            .iter()
            .zip(&bb)
            .map(|(u, v)| (u - v) * (u - v))
            .sum::<f64>()
            .sqrt();
        best = best.max(db / dy);
    }
    best
}

fn sample_in_ball(center: &[f64], radius: f64, gauss: &[f64]) -> Vec<f64> {
    let norm: f64 = gauss.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return center.to_vec();
    }
    // Direction from the Gaussian, radius from its first coordinate folded
    // into [0,1): deterministic and dense enough for a sup estimate.
    let u = (gauss[0].abs().fract()).min(0.999);
    let r = radius * u.powf(1.0 / center.len() as f64);
    center
        .iter()
        .zip(gauss)
        .map(|(c, g)| c + g / norm * r)
        .collect()
}

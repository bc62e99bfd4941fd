//! Stratonovich integration of `dX = b(t,X)dt + Σ Z_i(X)∘dB^i` with
//! τ-stopping at the exit from a region, plus the Monte-Carlo checks built
//! on path ensembles (Krylov occupation estimates, the Itô-formula defect).

mod integrate;
mod ito_check;
mod krylov;

pub use integrate::{integrate, integrate_ito, ItoSde};
pub use ito_check::ito_consistency_check;
pub use krylov::krylov_check;

use crate::error::{Error, Result};
use crate::fields::DriftSpec;
use crate::group::CarnotGroupSpec;
use crate::rng::{fill_standard_normal, stream_rng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// Seeded Brownian increments: `n_steps × m` draws of N(0, dt), reproducible
/// from `(seed, stream_id)`.
#[derive(Clone, Debug)]
pub struct BrownianDriver {
    pub n_steps: usize,
    pub dt: f64,
    pub m: usize,
    pub seed: u64,
    pub stream_id: u64,
    increments: Vec<f64>,
}

/// Draws a driver for horizon `T` with `n_steps` steps. Distinct stream ids
/// give independent paths of the same master seed.
pub fn sample_driver(m: usize, t_horizon: f64, n_steps: usize, seed: u64, stream_id: u64) -> BrownianDriver {
    assert!(n_steps >= 1, "need at least one step");
    let dt = t_horizon / n_steps as f64;
    let mut increments = vec![0.0; n_steps * m];
    let mut rng = stream_rng(seed, stream_id);
    fill_standard_normal(&mut rng, &mut increments);
    let sqrt_dt = dt.sqrt();
    for v in increments.iter_mut() {
        *v *= sqrt_dt;
    }
    BrownianDriver {
        n_steps,
        dt,
        m,
        seed,
        stream_id,
        increments,
    }
}

impl BrownianDriver {
    /// Increments of step k, one per horizontal direction.
    pub fn step(&self, k: usize) -> &[f64] {
        &self.increments[k * self.m..(k + 1) * self.m]
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.n_steps as f64
    }

    /// The same Brownian path at a coarser resolution: consecutive blocks of
    /// `factor` increments are summed.
    pub fn coarsen(&self, factor: usize) -> Result<BrownianDriver> {
        if factor == 0 || self.n_steps % factor != 0 {
            return Err(Error::Contract(format!(
                "cannot coarsen {} steps by {factor}",
                self.n_steps
            )));
        }
        let n_steps = self.n_steps / factor;
        let mut increments = vec![0.0; n_steps * self.m];
        for k in 0..n_steps {
            for f in 0..factor {
                let src = self.step(k * factor + f);
                for i in 0..self.m {
                    increments[k * self.m + i] += src[i];
                }
            }
        }
        Ok(BrownianDriver {
            n_steps,
            dt: self.dt * factor as f64,
            m: self.m,
            seed: self.seed,
            stream_id: self.stream_id,
            increments,
        })
    }

    /// Rescales the path `B ↦ λB` on the horizon `λ²T` (the driver side of
    /// the dilation-equivariance identity).
    pub fn dilate_time(&self, lambda: f64) -> BrownianDriver {
        let mut out = self.clone();
        out.dt *= lambda * lambda;
        for v in out.increments.iter_mut() {
            *v *= lambda;
        }
        out
    }
}

/// Stopping region Ω of the τ-solution semantics.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    /// No stopping: τ = T on every path.
    All,
    /// Euclidean ball.
    Ball { center: Vec<f64>, radius: f64 },
}

impl Region {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::All => true,
            Region::Ball { center, radius } => {
                let d2: f64 = x
                    .iter()
                    .zip(center)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                d2 <= radius * radius
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Region::All => f64::INFINITY,
            Region::Ball { radius, .. } => 2.0 * radius,
        }
    }
}

/// One integrated path on the time grid of its driver; coordinates are
/// frozen exactly from the first grid time outside the region.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub dt: f64,
    /// `n_steps + 1` states.
    pub states: Vec<Vec<f64>>,
    /// Index of the first frozen state (`n_steps` when the path never left).
    pub tau_index: usize,
}

impl Trajectory {
    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k]
    }

    pub fn last(&self) -> &[f64] {
        self.states.last().expect("nonempty trajectory")
    }

    pub fn tau(&self) -> f64 {
        self.dt * self.tau_index as f64
    }

    pub fn exited(&self) -> bool {
        self.tau_index < self.states.len() - 1
    }
}

/// Integration scheme tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Stratonovich predictor-corrector in coordinates.
    EulerHeun,
    /// Group-exponential update: exact for the nilpotent bracket structure
    /// of the increment.
    LieExp,
}

/// A seeded ensemble of stopped trajectories.
#[derive(Clone, Debug)]
pub struct PathEnsemble {
    pub trajectories: Vec<Trajectory>,
    pub scheme: Scheme,
    pub seed: u64,
    pub stream_offset: u64,
}

/// Integrates `n_paths` independent paths (streams `offset..offset+n`),
/// deterministic and thread-count independent.
#[allow(clippy::too_many_arguments)]
pub fn integrate_ensemble(
    group: &CarnotGroupSpec,
    drift: &DriftSpec,
    x0: &[f64],
    t_horizon: f64,
    n_steps: usize,
    n_paths: usize,
    seed: u64,
    stream_offset: u64,
    region: &Region,
    scheme: Scheme,
) -> Result<PathEnsemble> {
    let trajectories: Result<Vec<Trajectory>> = (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let driver = sample_driver(
                group.horizontal_dim(),
                t_horizon,
                n_steps,
                seed,
                stream_offset + p as u64,
            );
            integrate(group, drift, x0, &driver, region, scheme)
        })
        .collect();
    Ok(PathEnsemble {
        trajectories: trajectories?,
        scheme,
        seed,
        stream_offset,
    })
}

/// CSV export `(path_id, t, x_1..x_N, frozen)`.
pub fn save_ensemble_csv(ensemble: &PathEnsemble, dim: usize, path: &Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(w, "path_id,t")?;
    for j in 1..=dim {
        write!(w, ",x_{j}")?;
    }
    writeln!(w, ",frozen")?;
    for (id, traj) in ensemble.trajectories.iter().enumerate() {
        for (k, state) in traj.states.iter().enumerate() {
            write!(w, "{id},{}", traj.dt * k as f64)?;
            for v in state {
                write!(w, ",{v}")?;
            }
            writeln!(w, ",{}", u8::from(k >= traj.tau_index && traj.exited()))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::mean_se;

    #[test]
    fn drivers_are_deterministic() {
        let a = sample_driver(2, 1.0, 50, 42, 7);
        let b = sample_driver(2, 1.0, 50, 42, 7);
        assert_eq!(a.increments, b.increments);
        let c = sample_driver(2, 1.0, 50, 42, 8);
        assert_ne!(a.increments, c.increments);
    }

    #[test]
    fn increment_variance_matches_dt() {
        let d = sample_driver(1, 2.0, 100_000, 9, 0);
        let sq: Vec<f64> = d.increments.iter().map(|v| v * v).collect();
        let (mean, se) = mean_se(&sq);
        assert!(
            (mean - d.dt).abs() < 3.0 * se,
            "var {mean} vs dt {} (se {se})",
            d.dt
        );
    }

    #[test]
    fn streams_are_uncorrelated() {
        let a = sample_driver(1, 1.0, 100_000, 5, 0);
        let b = sample_driver(1, 1.0, 100_000, 5, 1);
        let prods: Vec<f64> = a
            .increments
            .iter()
            .zip(&b.increments)
            .map(|(x, y)| x * y / a.dt)
            .collect();
        let (corr, se) = mean_se(&prods);
        assert!(corr.abs() < 3.0 * se, "corr {corr} (se {se})");
    }

    #[test]
    fn coarsening_preserves_the_path_sum() {
        let d = sample_driver(2, 1.0, 64, 3, 1);
        let c = d.coarsen(4).unwrap();
        assert_eq!(c.n_steps, 16);
        let total = |dr: &BrownianDriver, i: usize| -> f64 {
            (0..dr.n_steps).map(|k| dr.step(k)[i]).sum()
        };
        for i in 0..2 {
            assert!((total(&d, i) - total(&c, i)).abs() < 1e-12);
        }
        assert!(d.coarsen(3).is_err());
    }
}

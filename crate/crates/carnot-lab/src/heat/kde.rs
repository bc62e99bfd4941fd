//! Kernel-density estimation of the heat kernel from horizontal-Brownian
//! endpoint clouds: a direct Gaussian-product estimator at a point, and a
//! binned estimator (linear binning + separable Gaussian convolution) that
//! fills a whole spatial grid at once.

use super::{kernel_endpoints, McParams};
use crate::error::{Error, Result};
use crate::fields::{GridField, SpaceTimeGrid, SpatialGrid};
use crate::group::CarnotGroupSpec;
use std::sync::Arc;

#[derive(Clone, Debug)]
pub struct KdeEstimate {
    pub value: f64,
    pub std_error: f64,
    pub bandwidth: Vec<f64>,
    pub samples: usize,
}

/// Per-coordinate Silverman bandwidths of a cloud, optionally rescaled.
fn silverman_bandwidths(cloud: &[Vec<f64>], dim: usize, scale: f64) -> Vec<f64> {
    let n = cloud.len() as f64;
    let d = dim as f64;
    let factor = (4.0 / ((d + 2.0) * n)).powf(1.0 / (d + 4.0));
    (0..dim)
        .map(|j| {
            let mean = cloud.iter().map(|p| p[j]).sum::<f64>() / n;
            let var = cloud.iter().map(|p| (p[j] - mean).powi(2)).sum::<f64>() / (n - 1.0);
            scale * factor * var.sqrt()
        })
        .collect()
}

/// Pointwise KDE of `p(t, ·)` at `x`. `bandwidth = None` selects Silverman
/// per coordinate; a fixed bandwidth must be positive.
pub fn kernel_density_estimate(
    group: &CarnotGroupSpec,
    t: f64,
    x: &[f64],
    mc: &McParams,
    bandwidth: Option<f64>,
) -> Result<KdeEstimate> {
    if let Some(b) = bandwidth {
        if !(b > 0.0) {
            return Err(Error::Domain(format!("bandwidth must be positive, got {b}")));
        }
    }
    let cloud = kernel_endpoints(group, t, mc)?;
    kde_at_point(&cloud, group.dim(), x, bandwidth)
}

/// KDE evaluation on a precomputed endpoint cloud; lets callers reuse one
/// simulation across many evaluation points.
pub fn kde_at_point(
    cloud: &[Vec<f64>],
    dim: usize,
    x: &[f64],
    bandwidth: Option<f64>,
) -> Result<KdeEstimate> {
    let h = match bandwidth {
        Some(b) => vec![b; dim],
        None => silverman_bandwidths(cloud, dim, 1.0),
    };
    let norm: f64 = h
        .iter()
        .map(|hj| 1.0 / (hj * (2.0 * std::f64::consts::PI).sqrt()))
        .product();
    let vals: Vec<f64> = cloud
        .iter()
        .map(|pt| {
            let mut e = 0.0;
            for j in 0..dim {
                let u = (x[j] - pt[j]) / h[j];
                e += 0.5 * u * u;
            }
            norm * (-e).exp()
        })
        .collect();
    let (mean, se) = crate::stats::mean_se(&vals);
    Ok(KdeEstimate {
        value: mean,
        std_error: se,
        bandwidth: h,
        samples: cloud.len(),
    })
}

/// A gridded kernel estimate. The field is constant in time (two identical
/// slices) so the horizontal-derivative and convolution machinery applies.
#[derive(Clone, Debug)]
pub struct KernelGridEstimate {
    pub field: GridField,
    /// Fraction of endpoints that fell outside the box.
    pub mass_leakage: f64,
    pub bandwidth: Vec<f64>,
}

/// Estimates `p(t,·)` on `space` by linear binning of the endpoint cloud
/// followed by separable Gaussian smoothing. On abelian groups the exact
/// Gaussian kernel is gridded instead.
pub fn kernel_on_grid(
    group: &CarnotGroupSpec,
    t: f64,
    space: &SpatialGrid,
    mc: &McParams,
    bandwidth_scale: f64,
) -> Result<KernelGridEstimate> {
    let dim = group.dim();
    let grid = Arc::new(SpaceTimeGrid::new(
        t.max(1e-6),
        2,
        space.clone(),
        default_fd_step(space),
    )?);
    if group.is_abelian() {
        let field = GridField::from_spatial_fn(grid, |x| super::euclidean_heat_kernel(dim, t, x));
        return Ok(KernelGridEstimate {
            field,
            mass_leakage: 0.0,
            bandwidth: vec![0.0; dim],
        });
    }
    let cloud = kernel_endpoints(group, t, mc)?;
    // Floor the bandwidth at the grid spacing: narrower kernels are not
    // representable on the lattice.
    let h: Vec<f64> = silverman_bandwidths(&cloud, dim, bandwidth_scale)
        .into_iter()
        .enumerate()
        .map(|(j, hj)| hj.max(0.75 * space.spacing(j)))
        .collect();

    // Linear binning.
    let mut counts = vec![0.0f64; space.len()];
    let mut outside = 0usize;
    let mut base = vec![0usize; dim];
    let mut frac = vec![0.0f64; dim];
    for pt in &cloud {
        if !space.contains(pt) {
            outside += 1;
            continue;
        }
        for j in 0..dim {
            let hj = space.spacing(j);
            let pos = (pt[j] + space.bounds[j]) / hj;
            let mut i0 = pos.floor() as usize;
            if i0 >= space.n_x[j] - 1 {
                i0 = space.n_x[j] - 2;
            }
            base[j] = i0;
            frac[j] = (pos - i0 as f64).clamp(0.0, 1.0);
        }
        for c in 0..(1usize << dim) {
            let mut w = 1.0;
            let mut flat = 0usize;
            for j in 0..dim {
                let hi = (c >> j) & 1;
                w *= if hi == 1 { frac[j] } else { 1.0 - frac[j] };
                flat = flat * space.n_x[j] + base[j] + hi;
            }
            counts[flat] += w;
        }
    }
    let leakage = outside as f64 / cloud.len() as f64;
    if leakage > 0.01 {
        return Err(Error::Estimation(format!(
            "kernel mass leakage {:.2}% exceeds 1%: enlarge the box",
            leakage * 100.0
        )));
    }

    // Separable Gaussian convolution along each axis; cell mass to density.
    let n_total = cloud.len() as f64;
    for v in counts.iter_mut() {
        *v /= n_total;
    }
    for j in 0..dim {
        let hj = space.spacing(j);
        let reach = ((4.0 * h[j] / hj).ceil() as isize).max(1);
        let mut taps: Vec<f64> = (-reach..=reach)
            .map(|m| {
                let u = m as f64 * hj / h[j];
                (-0.5 * u * u).exp()
            })
            .collect();
        // Normalize the discrete kernel so that Σ taps · spacing = 1: keeps
        // the binned mass exact even when the bandwidth is near the spacing.
        let total: f64 = taps.iter().sum::<f64>() * hj;
        for tap in taps.iter_mut() {
            *tap /= total;
        }
        counts = convolve_axis(space, &counts, j, &taps, reach);
    }

    let mut field = GridField::zeros(grid);
    for node in 0..space.len() {
        field.values_mut()[(0, node)] = counts[node];
        field.values_mut()[(1, node)] = counts[node];
    }
    Ok(KernelGridEstimate {
        field,
        mass_leakage: leakage,
        bandwidth: h,
    })
}

pub(crate) fn default_fd_step(space: &SpatialGrid) -> f64 {
    // A little above the finest spacing keeps the FD stencil off the
    // interpolation noise floor.
    (0..space.dim())
        .map(|j| space.spacing(j))
        .fold(0.0f64, f64::max)
        * 1.5
}

fn convolve_axis(
    space: &SpatialGrid,
    values: &[f64],
    axis: usize,
    taps: &[f64],
    reach: isize,
) -> Vec<f64> {
    let dim = space.dim();
    let n_axis = space.n_x[axis] as isize;
    // Stride of the axis in the flat layout (row-major, last axis fastest).
    let mut stride = 1usize;
    for j in (axis + 1)..dim {
        stride *= space.n_x[j];
    }
    let mut out = vec![0.0; values.len()];
    for (flat, outv) in out.iter_mut().enumerate() {
        let idx_axis = (flat / stride) as isize % n_axis;
        let mut acc = 0.0;
        for (ti, tap) in taps.iter().enumerate() {
            let off = ti as isize - reach;
            let src_idx = idx_axis + off;
            if src_idx < 0 || src_idx >= n_axis {
                continue;
            }
            let src = (flat as isize + off * stride as isize) as usize;
            acc += tap * values[src];
        }
        *outv = acc;
    }
    out
}

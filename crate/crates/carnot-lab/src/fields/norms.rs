//! Mixed-norm Sobolev norms `S^{k,(q,p)}` on grid fields.
//!
//! The L^q-in-time of L^p-in-space norm is computed by trapezoidal
//! quadrature on the grid; exponent ∞ is the grid maximum (a lower bound of
//! the essential sup).

use super::{GridField, SpaceTimeGrid};
use crate::error::{Error, Result};
use crate::fields::derivative::{horizontal_derivative_with, multi_indices, HorizontalStencil};
use crate::group::CarnotGroupSpec;

fn check_exponent(e: f64) -> Result<()> {
    if e.is_nan() || e < 1.0 {
        return Err(Error::Domain(format!("exponent must be in [1, ∞], got {e}")));
    }
    Ok(())
}

/// Spatial L^p norm of one time slice (grid max for p = ∞).
pub fn spatial_lp(field: &GridField, k: usize, p: f64) -> f64 {
    spatial_lp_slice(field.grid(), field.time_slice(k), p)
}

pub(crate) fn spatial_lp_slice(grid: &SpaceTimeGrid, slice: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return slice.iter().fold(0.0, |acc, v| acc.max(v.abs()));
    }
    let mut acc = 0.0;
    for (node, v) in slice.iter().enumerate() {
        if *v != 0.0 {
            acc += grid.space.quad_weight(node) * v.abs().powf(p);
        }
    }
    acc.powf(1.0 / p)
}

/// `(∫_0^T (∫ |f|^p dx)^{q/p} dt)^{1/q}`.
pub fn mixed_norm(field: &GridField, q: f64, p: f64) -> Result<f64> {
    check_exponent(q)?;
    check_exponent(p)?;
    let grid = field.grid();
    let slices: Vec<f64> = (0..grid.n_t).map(|k| spatial_lp(field, k, p)).collect();
    if q.is_infinite() {
        return Ok(slices.into_iter().fold(0.0, f64::max));
    }
    let mut acc = 0.0;
    for (k, s) in slices.iter().enumerate() {
        if *s != 0.0 {
            acc += grid.time_weight(k) * s.powf(q);
        }
    }
    Ok(acc.powf(1.0 / q))
}

/// `Σ_{|I| ≤ k} ‖Z_I f‖_{L^q L^p}` with Z_I over horizontal indices.
pub fn sobolev_norm(
    group: &CarnotGroupSpec,
    field: &GridField,
    k: usize,
    q: f64,
    p: f64,
) -> Result<f64> {
    let delta = field.grid().fd_step;
    let min_bound = field
        .grid()
        .space
        .bounds
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if k as f64 * delta > min_bound {
        return Err(Error::Contract(format!(
            "stencil reach k·δ = {} exceeds the box bound {min_bound}",
            k as f64 * delta
        )));
    }
    let stencil = HorizontalStencil::new(group, field.grid().clone(), delta);
    let mut total = 0.0;
    // Walk the derivative tree level by level, reusing parents.
    let mut level: Vec<GridField> = vec![field.clone()];
    total += mixed_norm(field, q, p)?;
    for _ in 0..k {
        let mut next = Vec::with_capacity(level.len() * group.horizontal_dim());
        for parent in &level {
            for i in 0..group.horizontal_dim() {
                let d = horizontal_derivative_with(&stencil, parent, i);
                total += mixed_norm(&d, q, p)?;
                next.push(d);
            }
        }
        level = next;
    }
    Ok(total)
}

/// Grid sup of |f| over all times and nodes.
pub fn sup_norm(field: &GridField) -> f64 {
    field.values().iter().fold(0.0, |acc: f64, v| acc.max(v.abs()))
}

/// Grid sups of `Z_I f` for every horizontal multi-index with |I| ≤ k,
/// returned alongside the indices.
pub fn derivative_sups(
    group: &CarnotGroupSpec,
    field: &GridField,
    k: usize,
) -> Vec<(Vec<usize>, f64)> {
    let stencil = HorizontalStencil::new(group, field.grid().clone(), field.grid().fd_step);
    let indices = multi_indices(group.horizontal_dim(), k);
    let mut cache: Vec<(Vec<usize>, GridField)> = vec![(vec![], field.clone())];
    let mut out = Vec::with_capacity(indices.len());
    for idx in indices {
        if idx.is_empty() {
            out.push((idx, sup_norm(field)));
            continue;
        }
        let parent_idx = &idx[..idx.len() - 1];
        let parent = cache
            .iter()
            .find(|(i, _)| i == parent_idx)
            .expect("parents precede children in graded order")
            .1
            .clone();
        let d = horizontal_derivative_with(&stencil, &parent, idx[idx.len() - 1]);
        out.push((idx.clone(), sup_norm(&d)));
        cache.push((idx, d));
    }
    out
}

//! Group-intrinsic horizontal derivatives.
//!
//! `x ∘ (t e_i)` is exactly the integral curve of the left-invariant field
//! Z_i through x, so the central difference along it
//! `(Z_i f)(x) ≈ [f(x∘(δe_i)) - f(x∘(-δe_i))]/(2δ)` is second-order in δ.

use super::{GridField, SpaceTimeGrid};
use crate::group::CarnotGroupSpec;
use std::sync::Arc;

/// Precomputed interpolation stencil for applying Z_i on every grid node.
///
/// The stencil nodes `x ∘ (±δ e_i)` are fixed per node, so the derivative is
/// a sparse matrix-vector product; the PDE steppers rely on this.
pub struct HorizontalStencil {
    grid: Arc<SpaceTimeGrid>,
    /// Per direction i: (plus, minus) interpolation operators.
    ops: Vec<(InterpOperator, InterpOperator)>,
    inv_two_delta: f64,
    inv_delta_sq: f64,
    /// Number of stencil points that fell outside the box (zero-extended).
    pub clipped: usize,
}

/// Sparse interpolation: for each target node, up to 2^d (source, weight)
/// pairs; empty when the point leaves the box (zero extension).
pub struct InterpOperator {
    offsets: Vec<u32>,
    entries: Vec<(u32, f64)>,
}

impl InterpOperator {
    fn build(grid: &SpaceTimeGrid, points: impl Iterator<Item = Vec<f64>>) -> (Self, usize) {
        let s = &grid.space;
        let d = s.dim();
        let mut offsets = Vec::with_capacity(s.len() + 1);
        let mut entries = Vec::new();
        let mut clipped = 0usize;
        offsets.push(0u32);
        for x in points {
            let inside = s.contains(&x);
            if !inside {
                clipped += 1;
            } else {
                let mut base = vec![0usize; d];
                let mut frac = vec![0.0f64; d];
                for j in 0..d {
                    let h = s.spacing(j);
                    let pos = (x[j] + s.bounds[j]) / h;
                    let mut i0 = pos.floor() as usize;
                    if i0 >= s.n_x[j] - 1 {
                        i0 = s.n_x[j] - 2;
                    }
                    base[j] = i0;
                    frac[j] = (pos - i0 as f64).clamp(0.0, 1.0);
                }
                for c in 0..(1usize << d) {
                    let mut w = 1.0;
                    let mut flat = 0usize;
                    for j in 0..d {
                        let hi = (c >> j) & 1;
                        w *= if hi == 1 { frac[j] } else { 1.0 - frac[j] };
                        flat = flat * s.n_x[j] + base[j] + hi;
                    }
                    if w != 0.0 {
                        entries.push((flat as u32, w));
                    }
                }
            }
            offsets.push(entries.len() as u32);
        }
        (InterpOperator { offsets, entries }, clipped)
    }

    #[inline]
    pub fn apply(&self, values: &[f64], node: usize) -> f64 {
        let lo = self.offsets[node] as usize;
        let hi = self.offsets[node + 1] as usize;
        let mut acc = 0.0;
        for &(src, w) in &self.entries[lo..hi] {
            acc += w * values[src as usize];
        }
        acc
    }
}

impl HorizontalStencil {
    pub fn new(group: &CarnotGroupSpec, grid: Arc<SpaceTimeGrid>, delta: f64) -> Self {
        let m = group.horizontal_dim();
        let n = group.dim();
        let mut ops = Vec::with_capacity(m);
        let mut clipped = 0;
        for i in 0..m {
            let mut step = vec![0.0; n];
            step[i] = delta;
            let (plus, c1) = InterpOperator::build(
                &grid,
                (0..grid.space.len()).map(|node| {
                    let x = grid.space.node(node);
                    let mut out = vec![0.0; n];
                    group.compose_into(&x, &step, &mut out);
                    out
                }),
            );
            step[i] = -delta;
            let (minus, c2) = InterpOperator::build(
                &grid,
                (0..grid.space.len()).map(|node| {
                    let x = grid.space.node(node);
                    let mut out = vec![0.0; n];
                    group.compose_into(&x, &step, &mut out);
                    out
                }),
            );
            clipped += c1 + c2;
            ops.push((plus, minus));
        }
        HorizontalStencil {
            grid,
            ops,
            inv_two_delta: 1.0 / (2.0 * delta),
            inv_delta_sq: 1.0 / (delta * delta),
            clipped,
        }
    }

    pub fn grid(&self) -> &Arc<SpaceTimeGrid> {
        &self.grid
    }

    pub fn horizontal_dim(&self) -> usize {
        self.ops.len()
    }

    /// `(Z_i f)` of one spatial slice, written into `out`.
    pub fn derivative_slice(&self, i: usize, values: &[f64], out: &mut [f64]) {
        let (plus, minus) = &self.ops[i];
        for node in 0..out.len() {
            out[node] = (plus.apply(values, node) - minus.apply(values, node)) * self.inv_two_delta;
        }
    }

    /// Sub-Laplacian `L f = Σ_i Z_i² f` of one slice via the three-point
    /// second difference along each Z_i flow, written into `out`.
    pub fn sub_laplacian_slice(&self, values: &[f64], out: &mut [f64]) {
        for node in 0..out.len() {
            out[node] = 0.0;
        }
        for (plus, minus) in &self.ops {
            for node in 0..out.len() {
                out[node] += (plus.apply(values, node) - 2.0 * values[node]
                    + minus.apply(values, node))
                    * self.inv_delta_sq;
            }
        }
    }

    /// Drift term `Σ_i b^i Z_i f` for one slice; `b_slices[i][node]` holds
    /// the i-th drift component on the grid.
    pub fn drift_term_slice(&self, b_slices: &[Vec<f64>], values: &[f64], out: &mut [f64]) {
        for node in 0..out.len() {
            out[node] = 0.0;
        }
        for (i, (plus, minus)) in self.ops.iter().enumerate() {
            let b = &b_slices[i];
            for node in 0..out.len() {
                let d = (plus.apply(values, node) - minus.apply(values, node)) * self.inv_two_delta;
                out[node] += b[node] * d;
            }
        }
    }
}

/// `(Z_i f)` as a new grid field (the public operation).
pub fn horizontal_derivative(
    group: &CarnotGroupSpec,
    field: &GridField,
    i: usize,
    delta: f64,
) -> GridField {
    let stencil = HorizontalStencil::new(group, field.grid().clone(), delta);
    horizontal_derivative_with(&stencil, field, i)
}

/// Same, reusing a precomputed stencil.
pub fn horizontal_derivative_with(
    stencil: &HorizontalStencil,
    field: &GridField,
    i: usize,
) -> GridField {
    let mut out = GridField::zeros(field.grid().clone());
    let n_t = field.grid().n_t;
    let len = field.grid().space.len();
    let mut buf = vec![0.0; len];
    for k in 0..n_t {
        stencil.derivative_slice(i, field.time_slice(k), &mut buf);
        for (node, v) in buf.iter().enumerate() {
            out.values_mut()[(k, node)] = *v;
        }
    }
    out
}

/// `(Z_i^R f)`: central difference along the right-invariant flow
/// `t ↦ (t e_i) ∘ x`; used by the convolution-identity checks.
pub fn right_horizontal_derivative(
    group: &CarnotGroupSpec,
    field: &GridField,
    i: usize,
    delta: f64,
) -> GridField {
    let grid = field.grid().clone();
    let n = group.dim();
    let mut out = GridField::zeros(grid.clone());
    let mut step = vec![0.0; n];
    let mut plus = vec![0.0; n];
    let mut minus = vec![0.0; n];
    for k in 0..grid.n_t {
        for node in 0..grid.space.len() {
            let x = grid.space.node(node);
            step[i] = delta;
            group.compose_into(&step, &x, &mut plus);
            step[i] = -delta;
            group.compose_into(&step, &x, &mut minus);
            step[i] = 0.0;
            out.values_mut()[(k, node)] =
                (field.eval_spatial(k, &plus) - field.eval_spatial(k, &minus)) / (2.0 * delta);
        }
    }
    out
}

/// Time derivative by central differences (one-sided at the ends).
pub fn time_derivative(field: &GridField) -> GridField {
    let grid = field.grid().clone();
    let dt = grid.dt();
    let n_t = grid.n_t;
    let len = grid.space.len();
    let mut out = GridField::zeros(grid);
    for node in 0..len {
        for k in 0..n_t {
            let v = if k == 0 {
                (field.values()[(1, node)] - field.values()[(0, node)]) / dt
            } else if k == n_t - 1 {
                (field.values()[(n_t - 1, node)] - field.values()[(n_t - 2, node)]) / dt
            } else {
                (field.values()[(k + 1, node)] - field.values()[(k - 1, node)]) / (2.0 * dt)
            };
            out.values_mut()[(k, node)] = v;
        }
    }
    out
}

/// All horizontal multi-indices of length ≤ k (including the empty index),
/// in graded lexicographic order.
pub fn multi_indices(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    let mut level: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..k {
        let mut next = Vec::new();
        for idx in &level {
            for i in 0..m {
                let mut v = idx.clone();
                v.push(i);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        level = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{SpaceTimeGrid, SpatialGrid};
    use crate::group::heisenberg1;
    use std::sync::Arc;

    fn h1_grid() -> Arc<SpaceTimeGrid> {
        Arc::new(
            SpaceTimeGrid::new(1.0, 2, SpatialGrid::cube(3, 2.0, 17), 0.05).unwrap(),
        )
    }

    #[test]
    fn derivative_of_first_coordinate_is_one() {
        let g = heisenberg1();
        let grid = h1_grid();
        let f = GridField::from_spatial_fn(grid, |x| x[0]);
        let d = horizontal_derivative(&g, &f, 0, 0.05);
        // Interior nodes only; near the boundary the stencil zero-extends.
        let v = d.eval(0.0, &[0.3, -0.2, 0.1]);
        assert!((v - 1.0).abs() < 1e-10, "got {v}");
    }

    #[test]
    fn derivative_of_z_sees_the_frame() {
        // f(x) = z on H^1 has Z_1 f = -y/2.
        let g = heisenberg1();
        let grid = h1_grid();
        let f = GridField::from_spatial_fn(grid, |x| x[2]);
        let d = horizontal_derivative(&g, &f, 0, 0.05);
        let v = d.eval(0.0, &[0.5, 0.8, 0.0]);
        assert!((v + 0.4).abs() < 1e-9, "got {v}");
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        let g = heisenberg1();
        let grid = h1_grid();
        let f = GridField::from_spatial_fn(grid, |_| 3.5);
        let d = horizontal_derivative(&g, &f, 1, 0.05);
        let v = d.eval(0.0, &[0.3, 0.1, -0.4]);
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn multi_index_count() {
        // 1 + m + m² for k = 2.
        assert_eq!(multi_indices(2, 2).len(), 7);
        assert_eq!(multi_indices(3, 0).len(), 1);
    }

    #[test]
    fn richardson_second_order_in_delta() {
        // On f = x³ the central difference along the Z_1 flow has error
        // exactly δ². The point and steps are grid-aligned (and y = 0 keeps
        // the flow on the lattice) so interpolation is exact and the error
        // ratio between 2δ and δ is 4.
        let g = heisenberg1();
        let grid = Arc::new(
            SpaceTimeGrid::new(1.0, 2, SpatialGrid::cube(3, 2.0, 41), 0.05).unwrap(),
        );
        let f = GridField::from_spatial_fn(grid, |x| x[0] * x[0] * x[0]);
        let x = [0.4, 0.0, 0.2];
        let exact = 3.0 * x[0] * x[0];
        let mut errs = Vec::new();
        for delta in [0.2, 0.1] {
            let d = horizontal_derivative(&g, &f, 0, delta);
            errs.push((d.eval(0.0, &x) - exact).abs());
        }
        let rate = errs[0] / errs[1];
        assert!(rate > 3.7 && rate < 4.3, "rate {rate}, errs {errs:?}");
    }
}

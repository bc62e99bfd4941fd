//! Space-time grid fields over a Carnot group: multilinear interpolation with
//! zero extension outside the box (the compact-support convention), group-
//! intrinsic horizontal derivatives, mixed-norm Sobolev norms, mollifiers and
//! drift specifications.

mod derivative;
mod drift;
mod embedding;
mod io;
mod mollify;
mod norms;

pub use derivative::{
    horizontal_derivative, multi_indices, right_horizontal_derivative, time_derivative,
    HorizontalStencil,
};
pub use drift::{check_admissibility, DriftComponent, DriftExpr, DriftSpec};
pub use embedding::{embedding_alpha, embedding_scaling_test, EmbeddingExponents};
pub use io::{load_binary, load_csv, save_binary, save_csv};
pub use mollify::{group_convolve_point, mollify, Mollifier};
pub use norms::{derivative_sups, mixed_norm, sobolev_norm, spatial_lp, sup_norm};

use crate::error::{Error, Result};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Purely spatial box grid: per-coordinate symmetric bounds `[-R_j, R_j]`
/// sampled at `n_x[j]` nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    pub bounds: Vec<f64>,
    pub n_x: Vec<usize>,
}

impl SpatialGrid {
    pub fn new(bounds: Vec<f64>, n_x: Vec<usize>) -> Result<Self> {
        if bounds.len() != n_x.len() {
            return Err(Error::DimensionMismatch {
                expected: bounds.len(),
                got: n_x.len(),
            });
        }
        if n_x.iter().any(|&n| n < 2) {
            return Err(Error::Contract("spatial resolution must be >= 2".into()));
        }
        if bounds.iter().any(|&r| !(r > 0.0)) {
            return Err(Error::Contract("box bounds must be positive".into()));
        }
        Ok(SpatialGrid { bounds, n_x })
    }

    /// Uniform cube helper: same bound and resolution on every coordinate.
    pub fn cube(dim: usize, bound: f64, n: usize) -> Self {
        SpatialGrid::new(vec![bound; dim], vec![n; dim]).expect("valid cube grid")
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn spacing(&self, j: usize) -> f64 {
        2.0 * self.bounds[j] / (self.n_x[j] - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.n_x.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of node index along axis j.
    pub fn coord(&self, j: usize, idx: usize) -> f64 {
        -self.bounds[j] + self.spacing(j) * idx as f64
    }

    pub fn node(&self, flat: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        self.node_into(flat, &mut x);
        x
    }

    pub fn node_into(&self, mut flat: usize, out: &mut [f64]) {
        for j in (0..self.dim()).rev() {
            let idx = flat % self.n_x[j];
            flat /= self.n_x[j];
            out[j] = self.coord(j, idx);
        }
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        let mut flat = 0;
        for j in 0..self.dim() {
            flat = flat * self.n_x[j] + idx[j];
        }
        flat
    }

    /// Trapezoidal quadrature weight of a node (product over axes).
    pub fn quad_weight(&self, mut flat: usize) -> f64 {
        let mut w = 1.0;
        for j in (0..self.dim()).rev() {
            let idx = flat % self.n_x[j];
            flat /= self.n_x[j];
            let h = self.spacing(j);
            w *= if idx == 0 || idx == self.n_x[j] - 1 {
                0.5 * h
            } else {
                h
            };
        }
        w
    }

    pub fn box_volume(&self) -> f64 {
        self.bounds.iter().map(|r| 2.0 * r).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.bounds)
            .all(|(v, r)| v.abs() <= *r + 1e-12)
    }

    /// Tensor Catmull-Rom cubic interpolation: C¹ inside the box (windows
    /// shift inward near the boundary), zero outside, exact on quadratics.
    /// Used where evaluation smoothness matters (the Zvonkin map); the
    /// solver stencils stay multilinear.
    pub fn interpolate_cubic(&self, values: &[f64], x: &[f64]) -> f64 {
        let d = self.dim();
        debug_assert_eq!(x.len(), d);
        assert!(d <= 8, "spatial dimension > 8 not supported");
        let mut base = [0usize; 8];
        let mut w = [[0.0f64; 4]; 8];
        for j in 0..d {
            let r = self.bounds[j];
            if x[j] < -r || x[j] > r {
                return 0.0;
            }
            let h = self.spacing(j);
            let pos = (x[j] + r) / h;
            let mut i1 = pos.floor() as usize;
            if i1 >= self.n_x[j] - 1 {
                i1 = self.n_x[j] - 2;
            }
            let xi = (pos - i1 as f64).clamp(0.0, 1.0);
            // Window [i1-1, i1, i1+1, i1+2], shifted inward at the edges
            // with the local coordinate adjusted accordingly.
            let (start, t) = if i1 == 0 {
                (0usize, xi - 1.0)
            } else if i1 + 2 > self.n_x[j] - 1 {
                (self.n_x[j] - 4, xi + i1 as f64 - (self.n_x[j] - 3) as f64)
            } else {
                (i1 - 1, xi)
            };
            base[j] = start;
            let t2 = t * t;
            let t3 = t2 * t;
            w[j][0] = -0.5 * t3 + t2 - 0.5 * t;
            w[j][1] = 1.5 * t3 - 2.5 * t2 + 1.0;
            w[j][2] = -1.5 * t3 + 2.0 * t2 + 0.5 * t;
            w[j][3] = 0.5 * t3 - 0.5 * t2;
        }
        let corners = 4usize.pow(d as u32);
        let mut acc = 0.0;
        for c in 0..corners {
            let mut weight = 1.0;
            let mut flat = 0usize;
            let mut rem = c;
            for j in 0..d {
                let o = rem & 3;
                rem >>= 2;
                weight *= w[j][o];
                flat = flat * self.n_x[j] + base[j] + o;
            }
            if weight != 0.0 {
                acc += weight * values[flat];
            }
        }
        acc
    }

    /// Multilinear interpolation of `values` (one value per node) at `x`,
    /// zero outside the box.
    pub fn interpolate(&self, values: &[f64], x: &[f64]) -> f64 {
        let d = self.dim();
        debug_assert_eq!(x.len(), d);
        let mut base = [0usize; 8];
        let mut frac = [0.0f64; 8];
        assert!(d <= 8, "spatial dimension > 8 not supported");
        for j in 0..d {
            let r = self.bounds[j];
            if x[j] < -r || x[j] > r {
                return 0.0;
            }
            let h = self.spacing(j);
            let pos = (x[j] + r) / h;
            let mut i0 = pos.floor() as usize;
            if i0 >= self.n_x[j] - 1 {
                i0 = self.n_x[j] - 2;
            }
            base[j] = i0;
            frac[j] = (pos - i0 as f64).clamp(0.0, 1.0);
        }
        let corners = 1usize << d;
        let mut acc = 0.0;
        for c in 0..corners {
            let mut w = 1.0;
            let mut flat = 0;
            for j in 0..d {
                let hi = (c >> j) & 1;
                w *= if hi == 1 { frac[j] } else { 1.0 - frac[j] };
                flat = flat * self.n_x[j] + (base[j] + hi);
            }
            if w != 0.0 {
                acc += w * values[flat];
            }
        }
        acc
    }
}

/// Discretization carrier for `[0,T] × G`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeGrid {
    pub horizon: f64,
    pub n_t: usize,
    pub space: SpatialGrid,
    /// Group-intrinsic finite-difference step δ for horizontal derivatives.
    pub fd_step: f64,
}

impl SpaceTimeGrid {
    pub fn new(horizon: f64, n_t: usize, space: SpatialGrid, fd_step: f64) -> Result<Self> {
        if n_t < 2 {
            return Err(Error::Contract("time resolution must be >= 2".into()));
        }
        if !(horizon > 0.0) {
            return Err(Error::Contract("horizon must be positive".into()));
        }
        if !(fd_step > 0.0) {
            return Err(Error::Contract("fd step must be positive".into()));
        }
        Ok(SpaceTimeGrid {
            horizon,
            n_t,
            space,
            fd_step,
        })
    }

    pub fn dt(&self) -> f64 {
        self.horizon / (self.n_t - 1) as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        self.dt() * k as f64
    }

    pub fn time_weight(&self, k: usize) -> f64 {
        let dt = self.dt();
        if k == 0 || k == self.n_t - 1 {
            0.5 * dt
        } else {
            dt
        }
    }
}

/// A sampled scalar field on a [`SpaceTimeGrid`], `values[(k, node)]`.
/// Evaluation off-grid is multilinear inside the box and zero outside.
#[derive(Clone, Debug)]
pub struct GridField {
    grid: Arc<SpaceTimeGrid>,
    values: Array2<f64>,
}

impl GridField {
    pub fn zeros(grid: Arc<SpaceTimeGrid>) -> Self {
        let values = Array2::zeros((grid.n_t, grid.space.len()));
        GridField { grid, values }
    }

    pub fn from_fn(grid: Arc<SpaceTimeGrid>, mut f: impl FnMut(f64, &[f64]) -> f64) -> Self {
        let mut field = GridField::zeros(grid);
        let g = field.grid.clone();
        let mut x = vec![0.0; g.space.dim()];
        for k in 0..g.n_t {
            let t = g.time(k);
            for node in 0..g.space.len() {
                g.space.node_into(node, &mut x);
                field.values[(k, node)] = f(t, &x);
            }
        }
        field
    }

    /// Spatial-only field, constant in time.
    pub fn from_spatial_fn(grid: Arc<SpaceTimeGrid>, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        Self::from_fn(grid, |_, x| f(x))
    }

    pub fn from_values(grid: Arc<SpaceTimeGrid>, values: Array2<f64>) -> Result<Self> {
        if values.dim() != (grid.n_t, grid.space.len()) {
            return Err(Error::Contract(format!(
                "value array shape {:?} does not match grid ({}, {})",
                values.dim(),
                grid.n_t,
                grid.space.len()
            )));
        }
        Ok(GridField { grid, values })
    }

    pub fn grid(&self) -> &Arc<SpaceTimeGrid> {
        &self.grid
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array2<f64> {
        &mut self.values
    }

    pub fn time_slice(&self, k: usize) -> &[f64] {
        self.values.row(k).to_slice().expect("contiguous row")
    }

    /// Multilinear interpolation at time index `k`.
    pub fn eval_spatial(&self, k: usize, x: &[f64]) -> f64 {
        self.grid
            .space
            .interpolate(self.values.row(k).to_slice().expect("contiguous"), x)
    }

    /// Full space-time evaluation: linear in t (clamped to `[0, T]`),
    /// multilinear in space, zero outside the box.
    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        let g = &self.grid;
        let dt = g.dt();
        let pos = (t / dt).clamp(0.0, (g.n_t - 1) as f64);
        let k0 = (pos.floor() as usize).min(g.n_t - 2);
        let frac = pos - k0 as f64;
        let v0 = self.eval_spatial(k0, x);
        if frac == 0.0 {
            return v0;
        }
        let v1 = self.eval_spatial(k0 + 1, x);
        v0 * (1.0 - frac) + v1 * frac
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// In-place `self += a * other` (grids must match).
    pub fn axpy(&mut self, a: f64, other: &GridField) {
        assert_eq!(self.values.dim(), other.values.dim());
        self.values.zip_mut_with(&other.values, |s, o| *s += a * o);
    }

    pub fn scale(&mut self, a: f64) {
        self.values.mapv_inplace(|v| a * v);
    }
}

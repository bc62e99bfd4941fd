//! Truncated Baker-Campbell-Hausdorff arithmetic.
//!
//! On a step-r nilpotent algebra the BCH series terminates: with the weight
//! grading enforced on the structure constants, every term of degree > r
//! vanishes identically, so the degree-3 truncation below is *exact* for all
//! groups of step ≤ 3.

use super::CarnotGroupSpec;
use nalgebra::DMatrix;

/// Highest nilpotency step the truncation is exact for.
pub const MAX_STEP: usize = 3;

/// `out = x ∘ y = x + y + ½[x,y] + (1/12)([x,[x,y]] + [y,[y,x]])`.
pub fn compose(g: &CarnotGroupSpec, x: &[f64], y: &[f64], out: &mut [f64]) {
    let n = g.dim();
    debug_assert!(x.len() == n && y.len() == n && out.len() == n);
    let mut xy = Vec::with_capacity(n);
    g.bracket_into(x, y, &mut xy);
    let mut xxy = Vec::with_capacity(n);
    let mut yyx = Vec::with_capacity(n);
    if g.step() >= 3 {
        g.bracket_into(x, &xy, &mut xxy);
        // [y,[y,x]] = -[y, [x,y]]
        g.bracket_into(y, &xy, &mut yyx);
        for v in yyx.iter_mut() {
            *v = -*v;
        }
    } else {
        xxy.resize(n, 0.0);
        yyx.resize(n, 0.0);
    }
    for k in 0..n {
        out[k] = x[k] + y[k] + 0.5 * xy[k] + (xxy[k] + yyx[k]) / 12.0;
    }
}

/// Left-invariant field of e_j at x: `e_j + ½[x,e_j] + (1/12)[x,[x,e_j]]`.
pub fn left_field(g: &CarnotGroupSpec, x: &[f64], j: usize, out: &mut Vec<f64>) {
    field_impl(g, x, j, 0.5, out)
}

/// Right-invariant field of e_j at x: `e_j - ½[x,e_j] + (1/12)[x,[x,e_j]]`.
pub fn right_field(g: &CarnotGroupSpec, x: &[f64], j: usize, out: &mut Vec<f64>) {
    field_impl(g, x, j, -0.5, out)
}

fn field_impl(g: &CarnotGroupSpec, x: &[f64], j: usize, half_sign: f64, out: &mut Vec<f64>) {
    let n = g.dim();
    let ej = super::basis_vec(n, j);
    let mut x_ej = Vec::with_capacity(n);
    g.bracket_into(x, &ej, &mut x_ej);
    out.clear();
    out.resize(n, 0.0);
    out[j] = 1.0;
    for k in 0..n {
        out[k] += half_sign * x_ej[k];
    }
    if g.step() >= 3 {
        let mut xx_ej = Vec::with_capacity(n);
        g.bracket_into(x, &x_ej, &mut xx_ej);
        for k in 0..n {
            out[k] += xx_ej[k] / 12.0;
        }
    }
}

/// Derivative of `y ↦ x ∘ y`, columns
/// `v + ½[x,v] + (1/12)([x,[x,v]] + [v,[y,x]] + [y,[v,x]])` over basis v.
pub fn law_jacobian_y(g: &CarnotGroupSpec, x: &[f64], y: &[f64]) -> DMatrix<f64> {
    let n = g.dim();
    let mut yx = Vec::new();
    g.bracket_into(y, x, &mut yx);
    let mut mat = DMatrix::zeros(n, n);
    let (mut xv, mut xxv, mut v_yx, mut vx, mut y_vx) =
        (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for j in 0..n {
        let v = super::basis_vec(n, j);
        g.bracket_into(x, &v, &mut xv);
        g.bracket_into(x, &xv, &mut xxv);
        g.bracket_into(&v, &yx, &mut v_yx);
        g.bracket_into(&v, x, &mut vx);
        g.bracket_into(y, &vx, &mut y_vx);
        for r in 0..n {
            let mut val = if r == j { 1.0 } else { 0.0 };
            val += 0.5 * xv[r];
            if g.step() >= 3 {
                val += (xxv[r] + v_yx[r] + y_vx[r]) / 12.0;
            }
            mat[(r, j)] = val;
        }
    }
    mat
}

/// Derivative of `x ↦ x ∘ y`, columns
/// `v + ½[v,y] + (1/12)([v,[x,y]] + [x,[v,y]] + [y,[y,v]])` over basis v.
pub fn law_jacobian_x(g: &CarnotGroupSpec, x: &[f64], y: &[f64]) -> DMatrix<f64> {
    let n = g.dim();
    let mut xy = Vec::new();
    g.bracket_into(x, y, &mut xy);
    let mut mat = DMatrix::zeros(n, n);
    let (mut vy, mut v_xy, mut x_vy, mut yv, mut y_yv) =
        (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for j in 0..n {
        let v = super::basis_vec(n, j);
        g.bracket_into(&v, y, &mut vy);
        g.bracket_into(&v, &xy, &mut v_xy);
        g.bracket_into(x, &vy, &mut x_vy);
        g.bracket_into(y, &v, &mut yv);
        g.bracket_into(y, &yv, &mut y_yv);
        for r in 0..n {
            let mut val = if r == j { 1.0 } else { 0.0 };
            val += 0.5 * vy[r];
            if g.step() >= 3 {
                val += (v_xy[r] + x_vy[r] + y_yv[r]) / 12.0;
            }
            mat[(r, j)] = val;
        }
    }
    mat
}

/// `(Z_i' Z_i)(x)` in closed form: the directional derivative of
/// `x ↦ Z_i(x)` along `v = Z_i(x)` is `½[v,e_i] + (1/12)([v,[x,e_i]] + [x,[v,e_i]])`.
pub fn field_self_derivative(g: &CarnotGroupSpec, i: usize, x: &[f64]) -> Vec<f64> {
    let n = g.dim();
    let ei = super::basis_vec(n, i);
    let mut v = Vec::new();
    left_field(g, x, i, &mut v);
    let mut v_ei = Vec::new();
    g.bracket_into(&v, &ei, &mut v_ei);
    let mut out = vec![0.0; n];
    for k in 0..n {
        out[k] += 0.5 * v_ei[k];
    }
    if g.step() >= 3 {
        let mut x_ei = Vec::new();
        g.bracket_into(x, &ei, &mut x_ei);
        let mut v_xei = Vec::new();
        g.bracket_into(&v, &x_ei, &mut v_xei);
        let mut x_vei = Vec::new();
        g.bracket_into(x, &v_ei, &mut x_vei);
        for k in 0..n {
            out[k] += (v_xei[k] + x_vei[k]) / 12.0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use crate::group::{engel, heisenberg1, GroupPoint};

    #[test]
    fn associativity_spot_check() {
        let g = engel();
        let a = GroupPoint(vec![0.3, -0.1, 0.8, 0.2]);
        let b = GroupPoint(vec![-0.4, 0.9, 0.1, -0.6]);
        let c = GroupPoint(vec![0.5, 0.5, -0.3, 0.9]);
        let ab_c = g
            .group_law(&g.group_law(&a, &b).unwrap(), &c)
            .unwrap();
        let a_bc = g
            .group_law(&a, &g.group_law(&b, &c).unwrap())
            .unwrap();
        for (u, v) in ab_c.0.iter().zip(&a_bc.0) {
            assert!((u - v).abs() < 1e-13);
        }
    }

    #[test]
    fn stratonovich_correction_vanishes_on_heisenberg() {
        let g = heisenberg1();
        for i in 0..2 {
            let out = g.field_self_derivative(i, &[0.7, -1.1, 0.4]);
            assert!(out.iter().all(|v| v.abs() < 1e-15));
        }
    }
}

//! The Zvonkin transform `Φ(t,x) = x + u(t,x)` where u solves the vector
//! Kolmogorov equation with source `-b`: conjugating the singular-drift SDE
//! through Φ yields an SDE with a Lipschitz drift, which the uniqueness and
//! consistency experiments make visible at desk scale.

mod conjugate;
mod experiments;

pub use conjugate::{
    conjugated_coeffs, conjugated_coeffs_at_preimage, lipschitz_probe, ConjugatedSde,
};
pub use experiments::{conjugation_consistency, uniqueness_experiment};

use crate::error::{Error, Result};
use crate::fields::{horizontal_derivative, DriftSpec, GridField, SpaceTimeGrid};
use crate::group::CarnotGroupSpec;
use crate::pde::{operator_norm, select_lambda, PdeSolution, SolverOptions};
use crate::sde::Region;
use nalgebra::DMatrix;
use std::sync::Arc;

/// Tolerance allowed on the gradient certificates beyond the exact [½, 2]
/// band, absorbing the FD error of ∇u on the grid.
pub const GRAD_CERT_TOL: f64 = 0.05;

#[derive(Clone, Debug)]
pub struct ZvonkinMap {
    /// Vector-valued solution of `u_t + ½Lu + Σb^iZ_iu - λu = -b`, u(T)=0.
    pub solution: PdeSolution,
    pub lambda: f64,
    /// Certified ball Ω around x0.
    pub omega: Region,
    /// Grid sups on Ω of the operator norms (‖∇Φ‖, ‖∇Φ⁻¹‖).
    pub grad_bounds: (f64, f64),
    group_dim: usize,
    /// Z_i u per direction and component, for the conjugated diffusion.
    z_u: Vec<Vec<GridField>>,
    /// sup |u| over the grid; sets the inversion escape margin.
    u_sup: f64,
}

impl ZvonkinMap {
    /// `Φ(t,x) = x + u(t,x)`.
    pub fn apply(&self, t: f64, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for (j, comp) in self.solution.components.iter().enumerate() {
            out.push(x[j] + comp.eval(t, x));
        }
    }

    pub fn dim(&self) -> usize {
        self.group_dim
    }

    pub fn omega_center(&self) -> &[f64] {
        match &self.omega {
            Region::Ball { center, .. } => center,
            Region::All => unreachable!("omega is always a ball"),
        }
    }

    pub fn omega_radius(&self) -> f64 {
        match &self.omega {
            Region::Ball { radius, .. } => *radius,
            Region::All => unreachable!("omega is always a ball"),
        }
    }

    /// Inverts Φ(t,·) at y by the contraction `x ← y - u(t,x)`; geometric
    /// with rate ≤ ½ thanks to the certified `‖∇u‖ ≤ ½`.
    pub fn invert(&self, t: f64, y: &[f64]) -> Result<Vec<f64>> {
        let n = self.group_dim;
        let center = self.omega_center().to_vec();
        let escape_radius = self.omega_radius() + 2.0 * self.u_sup + 1e-9;
        let mut x = y.to_vec();
        let mut phi = Vec::with_capacity(n);
        for _ in 0..60 {
            self.apply(t, &x, &mut phi);
            let err: f64 = phi
                .iter()
                .zip(y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if err < 1e-10 {
                return Ok(x);
            }
            for j in 0..n {
                x[j] = y[j] - (phi[j] - x[j]);
            }
            let dist: f64 = x
                .iter()
                .zip(&center)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if dist > escape_radius {
                return Err(Error::OutOfDomain {
                    context: "Zvonkin inversion".into(),
                });
            }
        }
        Err(Error::Estimation(
            "Zvonkin inversion did not converge in 60 iterations".into(),
        ))
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `Z_i u` (vector in the component index) at (t, x).
    pub fn z_u_vector(&self, i: usize, t: f64, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for comp in &self.z_u[i] {
            out.push(comp.eval(t, x));
        }
    }

    /// `u(t, x)` as an R^N vector.
    pub fn u_vector(&self, t: f64, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for comp in &self.solution.components {
            out.push(comp.eval(t, x));
        }
    }
}

/// Builds the map: solves the vector PDE with `f = -b` through the λ ladder,
/// then certifies the gradient bounds on a ball around x0, halving its
/// radius until certification passes.
pub fn build_map(
    group: &CarnotGroupSpec,
    drift: &DriftSpec,
    grid: Arc<SpaceTimeGrid>,
    x0: &[f64],
    epsilon: f64,
    opts: &SolverOptions,
) -> Result<ZvonkinMap> {
    let n = group.dim();
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x0.len(),
        });
    }
    // f_j = -(Σ_i b^i Z_i)_j on the grid.
    let mut f = Vec::with_capacity(n);
    let mut bvec = Vec::new();
    for j in 0..n {
        let mut field = GridField::zeros(grid.clone());
        let mut x = vec![0.0; n];
        for k in 0..grid.n_t {
            let t = grid.time(k);
            for node in 0..grid.space.len() {
                grid.space.node_into(node, &mut x);
                drift.euclidean_vector_into(group, t, &x, &mut bvec);
                field.values_mut()[(k, node)] = -bvec[j];
            }
        }
        f.push(field);
    }
    let (lambda, solution) = select_lambda(group, drift, &f, epsilon, opts)?;

    // Z_i u fields for the conjugated diffusion columns.
    let delta = grid.fd_step;
    let mut z_u = Vec::with_capacity(group.horizontal_dim());
    for i in 0..group.horizontal_dim() {
        let mut per_comp = Vec::with_capacity(n);
        for comp in &solution.components {
            per_comp.push(horizontal_derivative(group, comp, i, delta));
        }
        z_u.push(per_comp);
    }
    let u_sup = solution
        .components
        .iter()
        .map(crate::fields::sup_norm)
        .fold(0.0f64, f64::max);

    // Certify on a shrinking ball.
    let mut radius = (0..n)
        .map(|j| grid.space.bounds[j] - x0[j].abs())
        .fold(f64::INFINITY, f64::min)
        - 2.0 * delta;
    if !(radius > 0.0) {
        return Err(Error::Contract("x0 too close to the box boundary".into()));
    }
    let min_radius = 2.0 * delta;
    loop {
        match certify(&solution, x0, radius) {
            Some(bounds) => {
                return Ok(ZvonkinMap {
                    solution,
                    lambda,
                    omega: Region::Ball {
                        center: x0.to_vec(),
                        radius,
                    },
                    grad_bounds: bounds,
                    group_dim: n,
                    z_u,
                    u_sup,
                });
            }
            None => {
                radius *= 0.5;
                if radius < min_radius {
                    return Err(Error::Certification(format!(
                        "gradient certificates failed down to radius {radius:.3e}"
                    )));
                }
            }
        }
    }
}

/// Measures sup ‖I + ∇u‖_op and sup ‖(I + ∇u)⁻¹‖_op over grid nodes inside
/// the ball at all stored times; passes when both sit in [½-tol, 2+tol].
fn certify(solution: &PdeSolution, center: &[f64], radius: f64) -> Option<(f64, f64)> {
    let grid = solution.components[0].grid();
    let space = &grid.space;
    let dim = space.dim();
    let mut sup_fwd: f64 = 0.0;
    let mut sup_inv: f64 = 0.0;
    let mut jac = DMatrix::zeros(dim, dim);
    let mut idx = vec![0usize; dim];
    let mut x = vec![0.0; dim];
    let mut any = false;
    for k in 0..grid.n_t {
        for node in 0..space.len() {
            space.node_into(node, &mut x);
            let d2: f64 = x
                .iter()
                .zip(center)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if d2 > radius * radius {
                continue;
            }
            any = true;
            let mut rem = node;
            for j in (0..dim).rev() {
                idx[j] = rem % space.n_x[j];
                rem /= space.n_x[j];
            }
            for c in 0..dim {
                let h = space.spacing(c);
                let stride: usize = space.n_x[c + 1..].iter().product();
                let (lo, hi, div) = if idx[c] == 0 {
                    (node, node + stride, h)
                } else if idx[c] == space.n_x[c] - 1 {
                    (node - stride, node, h)
                } else {
                    (node - stride, node + stride, 2.0 * h)
                };
                for (r, comp) in solution.components.iter().enumerate() {
                    let du = (comp.values()[(k, hi)] - comp.values()[(k, lo)]) / div;
                    jac[(r, c)] = if r == c { 1.0 + du } else { du };
                }
            }
            sup_fwd = sup_fwd.max(operator_norm(&jac));
            match jac.clone().try_inverse() {
                Some(inv) => sup_inv = sup_inv.max(operator_norm(&inv)),
                None => return None,
            }
        }
    }
    if !any {
        return None;
    }
    let lo = 0.5 - GRAD_CERT_TOL;
    let hi = 2.0 + GRAD_CERT_TOL;
    if sup_fwd >= lo && sup_fwd <= hi && sup_inv >= lo && sup_inv <= hi {
        Some((sup_fwd, sup_inv))
    } else {
        None
    }
}

/// Pairwise injectivity spot check of Φ(t,·) on seeded sample points in Ω at
/// every stored time: `|Φx - Φy| ≥ c|x - y|` for the contraction constant
/// c = 1 - ‖∇u‖ ≥ ½ (measured with a safety factor).
pub fn injectivity_check(map: &ZvonkinMap, n_points: usize, seed: u64) -> Result<bool> {
    use crate::rng::{fill_standard_normal, stream_rng};
    let n = map.dim();
    let center = map.omega_center().to_vec();
    let radius = map.omega_radius();
    let mut rng = stream_rng(seed, 0);
    let mut pts = Vec::with_capacity(n_points);
    let mut draw = vec![0.0; n];
    while pts.len() < n_points {
        fill_standard_normal(&mut rng, &mut draw);
        let norm: f64 = draw.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let scale = radius * 0.95 / norm * (pts.len() as f64 / n_points as f64).sqrt();
        pts.push(
            center
                .iter()
                .zip(&draw)
                .map(|(c, d)| c + d * scale)
                .collect::<Vec<f64>>(),
        );
    }
    let grid = map.solution.components[0].grid().clone();
    let mut phi_a = Vec::new();
    let mut phi_b = Vec::new();
    for k in 0..grid.n_t {
        let t = grid.time(k);
        for a in 0..pts.len() {
            for b in (a + 1)..pts.len() {
                map.apply(t, &pts[a], &mut phi_a);
                map.apply(t, &pts[b], &mut phi_b);
                let d_in: f64 = pts[a]
                    .iter()
                    .zip(&pts[b])
                    .map(|(u, v)| (u - v) * (u - v))
                    .sum::<f64>()
                    .sqrt();
                let d_out: f64 = phi_a
                    .iter()
                    .zip(&phi_b)
                    .map(|(u, v)| (u - v) * (u - v))
                    .sum::<f64>()
                    .sqrt();
                if d_out < 0.25 * d_in {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

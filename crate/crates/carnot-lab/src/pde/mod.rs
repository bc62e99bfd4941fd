//! Parabolic solvers for the sub-Laplacian: the forward heat equation
//! `u_t - νLu = f`, `u(0) = 0`, and the backward Kolmogorov equation
//! `u_t + ½Lu + Σ b^i Z_i u - λu = f`, `u(T) = 0`, solved by time reversal
//! with Picard iteration on the drift term.

mod kolmogorov;
mod lambda;
mod stepper;

pub use kolmogorov::solve_kolmogorov;
pub use lambda::{select_lambda, select_lambda_traced, LambdaLadderRecord};

use crate::error::{Error, Result};
use crate::fields::{sobolev_norm, time_derivative, GridField};
use crate::group::CarnotGroupSpec;
use nalgebra::DMatrix;

/// Solver controls. The defaults enforce the explicit stability bound, a
/// Picard tolerance below the FD truncation floor, and the automatic
/// horizon-splitting fallback on non-contraction.
#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    /// Substeps per stored slice; `None` derives the count from stability.
    pub substeps_per_slice: Option<usize>,
    pub safety: f64,
    /// Convergence tolerance for the S^{1,(q,p)} Picard distance.
    pub picard_tol: f64,
    pub max_picard: usize,
    /// Exponents (q, p) of the Picard distance norm.
    pub picard_norm: (f64, f64),
    pub max_split_depth: u32,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            substeps_per_slice: None,
            safety: 0.9,
            picard_tol: 1e-8,
            max_picard: 100,
            picard_norm: (2.0, 2.0),
            max_split_depth: 4,
        }
    }
}

/// A grid solution with its diagnostics: the plug-in residual in discrete
/// L², Picard iteration count, the damping parameter and the grid sup of the
/// Euclidean gradient (operator norm across components).
#[derive(Clone, Debug)]
pub struct PdeSolution {
    pub components: Vec<GridField>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub lambda: f64,
    pub grad_sup: f64,
}

impl PdeSolution {
    pub fn component(&self, j: usize) -> &GridField {
        &self.components[j]
    }

    pub fn eval_vector(&self, t: f64, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for c in &self.components {
            out.push(c.eval(t, x));
        }
    }
}

/// Solves `u_t - Lu = f` with `u(0) = 0` (diffusion coefficient 1).
pub fn solve_heat(
    group: &CarnotGroupSpec,
    f: &GridField,
    opts: &SolverOptions,
) -> Result<PdeSolution> {
    solve_heat_nu(group, f, 1.0, opts)
}

/// Same with an explicit diffusion coefficient ν (the Kolmogorov equation
/// uses ½L; this solver never rescales user data).
pub fn solve_heat_nu(
    group: &CarnotGroupSpec,
    f: &GridField,
    nu: f64,
    opts: &SolverOptions,
) -> Result<PdeSolution> {
    if !f.is_finite() {
        return Err(Error::Contract("source field has non-finite values".into()));
    }
    let grid = f.grid().clone();
    let stencil = crate::fields::HorizontalStencil::new(group, grid.clone(), grid.fd_step);
    let plan = stepper::StepPlan::build(group, &grid, nu, 0.0, 0.0, opts)?;
    let march = stepper::march_scalar(
        &stencil,
        &grid,
        &plan,
        &stepper::SourceSpec {
            field: Some(f),
            sign: 1.0,
            reversed: false,
        },
        None,
        None,
        true,
    );
    let u = GridField::from_values(
        grid.clone(),
        stepper::slices_to_array(&march.output, grid.space.len()),
    )?;
    let grad_sup = euclidean_gradient_sup(std::slice::from_ref(&u));
    Ok(PdeSolution {
        components: vec![u],
        residual_norm: march.residual,
        iterations: 1,
        lambda: 0.0,
        grad_sup,
    })
}

/// A-priori ratio `‖u‖_{S̃^{k+2,(q,p)}} / ‖f‖_{S^{k,(q,p)}}` for the heat
/// solve; bounded uniformly under refinement when the estimate holds.
#[derive(Clone, Debug)]
pub struct AprioriReport {
    pub ratio: f64,
    pub solution_norm: f64,
    pub source_norm: f64,
}

pub fn apriori_heat_check(
    group: &CarnotGroupSpec,
    solution: &PdeSolution,
    f: &GridField,
    k: usize,
    q: f64,
    p: f64,
) -> Result<AprioriReport> {
    let f_norm = sobolev_norm(group, f, k, q, p)?;
    let u = &solution.components[0];
    let u_t = time_derivative(u);
    let solution_norm =
        sobolev_norm(group, u, k + 2, q, p)? + sobolev_norm(group, &u_t, k, q, p)?;
    let ratio = if f_norm == 0.0 {
        0.0
    } else {
        solution_norm / f_norm
    };
    Ok(AprioriReport {
        ratio,
        solution_norm,
        source_norm: f_norm,
    })
}

/// Grid sup over all stored times/nodes of the operator norm of the
/// Euclidean Jacobian `(∂u_j/∂x_c)` (central differences inside, one-sided
/// at the box boundary).
pub fn euclidean_gradient_sup(components: &[GridField]) -> f64 {
    let grid = components[0].grid();
    let space = &grid.space;
    let dim = space.dim();
    let rows = components.len();
    let mut sup: f64 = 0.0;
    let mut jac = DMatrix::zeros(rows, dim);
    let mut idx = vec![0usize; dim];
    for k in 0..grid.n_t {
        for node in 0..space.len() {
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
                for (r, comp) in components.iter().enumerate() {
                    jac[(r, c)] = (comp.values()[(k, hi)] - comp.values()[(k, lo)]) / div;
                }
            }
            sup = sup.max(operator_norm(&jac));
        }
    }
    sup
}

/// Spectral norm by power iteration on JᵀJ.
pub(crate) fn operator_norm(j: &DMatrix<f64>) -> f64 {
    let gram = j.transpose() * j;
    let n = gram.nrows();
    let mut v = nalgebra::DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut lambda = 0.0;
    for _ in 0..40 {
        let w = &gram * &v;
        let norm = w.norm();
        if norm < 1e-300 {
            return 0.0;
        }
        lambda = norm;
        v = w / norm;
    }
    lambda.sqrt()
}

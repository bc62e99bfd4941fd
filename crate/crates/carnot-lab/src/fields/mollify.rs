//! Group-dilated mollifiers `φ_n(y) = n^Q φ(D(n)y)` and group convolution
//! `(f∗g)(x) = ∫ f(x∘y⁻¹) g(y) dy`.

use super::GridField;
use crate::group::CarnotGroupSpec;

/// A nonnegative unit-mass bump supported in the homogeneous-norm ball of
/// the given radius, evaluated through the group's homogeneous norm.
#[derive(Clone, Debug)]
pub struct Mollifier {
    support: f64,
    /// Quadrature nodes per coordinate when integrating against φ_n.
    quad_points: usize,
    /// Normalization so that ∫ φ = 1 (computed per group on first use).
    mass_inv: f64,
}

impl Mollifier {
    pub fn new(group: &CarnotGroupSpec, support: f64) -> Self {
        Self::with_quad_points(group, support, 9)
    }

    pub fn with_quad_points(group: &CarnotGroupSpec, support: f64, quad_points: usize) -> Self {
        let mut m = Mollifier {
            support,
            quad_points,
            mass_inv: 1.0,
        };
        let mass = m.integrate_raw(group);
        m.mass_inv = 1.0 / mass;
        m
    }

    pub fn support(&self) -> f64 {
        self.support
    }

    fn raw(&self, group: &CarnotGroupSpec, y: &[f64]) -> f64 {
        let s = group.homogeneous_norm(y) / self.support;
        if s >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - s * s)).exp()
        }
    }

    /// φ(y): nonnegative, unit mass, supported in {‖y‖ ≤ support}.
    pub fn density(&self, group: &CarnotGroupSpec, y: &[f64]) -> f64 {
        self.mass_inv * self.raw(group, y)
    }

    /// φ_n(y) = n^Q φ(D(n) y).
    pub fn density_scaled(&self, group: &CarnotGroupSpec, n: f64, y: &[f64]) -> f64 {
        let mut scaled = y.to_vec();
        group.dilate_into(n, &mut scaled);
        n.powi(group.homogeneous_dim() as i32) * self.density(group, &scaled)
    }

    fn integrate_raw(&self, group: &CarnotGroupSpec) -> f64 {
        let mut acc = 0.0;
        self.quad_over_support(group, 1.0, |y, w| acc += w * self.raw(group, y));
        acc
    }

    /// Midpoint quadrature over the bounding box of supp φ_n. The ball
    /// {‖y‖ ≤ S/n} is contained in the box |y_j| ≤ (S/n)^{α_j}.
    pub fn quad_over_support(
        &self,
        group: &CarnotGroupSpec,
        n: f64,
        mut visit: impl FnMut(&[f64], f64),
    ) {
        let dim = group.dim();
        let radius = self.support / n;
        let half: Vec<f64> = group
            .weights()
            .iter()
            .map(|&w| radius.powi(w as i32))
            .collect();
        let k = self.quad_points;
        let steps: Vec<f64> = half.iter().map(|h| 2.0 * h / k as f64).collect();
        let cell: f64 = steps.iter().product();
        let mut idx = vec![0usize; dim];
        let mut y = vec![0.0; dim];
        loop {
            for j in 0..dim {
                y[j] = -half[j] + (idx[j] as f64 + 0.5) * steps[j];
            }
            visit(&y, cell);
            // Odometer increment.
            let mut j = dim;
            loop {
                if j == 0 {
                    return;
                }
                j -= 1;
                idx[j] += 1;
                if idx[j] < k {
                    break;
                }
                idx[j] = 0;
            }
        }
    }
}

/// Group convolution `(f ∗ φ_n)(t,x) = ∫ f(t, x∘y⁻¹) φ_n(y) dy`, field-valued.
/// Mass-1 mollifiers preserve constants; as n grows this converges to f on
/// continuous fields.
pub fn mollify(
    group: &CarnotGroupSpec,
    field: &GridField,
    n: f64,
    phi: &Mollifier,
) -> GridField {
    let grid = field.grid().clone();
    let mut out = GridField::zeros(grid.clone());
    let dim = group.dim();
    let mut xm = vec![0.0; dim];
    let mut y_inv = vec![0.0; dim];
    for k in 0..grid.n_t {
        for node in 0..grid.space.len() {
            let x = grid.space.node(node);
            let mut acc = 0.0;
            phi.quad_over_support(group, n, |y, w| {
                let d = phi.density_scaled(group, n, y);
                if d > 0.0 {
                    for j in 0..dim {
                        y_inv[j] = -y[j];
                    }
                    group.compose_into(&x, &y_inv, &mut xm);
                    acc += w * d * field.eval_spatial(k, &xm);
                }
            });
            out.values_mut()[(k, node)] = acc;
        }
    }
    out
}

/// Pointwise group convolution of a callable against a gridded kernel slice:
/// `(f ∗ g)(x) = ∫ f(x∘y⁻¹) g(y) dy`, quadrature over the kernel's grid.
pub fn group_convolve_point(
    group: &CarnotGroupSpec,
    f: &dyn Fn(&[f64]) -> f64,
    kernel: &GridField,
    kernel_slice: usize,
    x: &[f64],
) -> f64 {
    let grid = kernel.grid();
    let dim = group.dim();
    let mut y_inv = vec![0.0; dim];
    let mut xy = vec![0.0; dim];
    let slice = kernel.time_slice(kernel_slice);
    let mut acc = 0.0;
    for node in 0..grid.space.len() {
        let g_val = slice[node];
        if g_val == 0.0 {
            continue;
        }
        let y = grid.space.node(node);
        for j in 0..dim {
            y_inv[j] = -y[j];
        }
        group.compose_into(x, &y_inv, &mut xy);
        let f_val = f(&xy);
        if f_val != 0.0 {
            acc += grid.space.quad_weight(node) * f_val * g_val;
        }
    }
    acc
}

//! Exact algebra of homogeneous Carnot groups in exponential coordinates of
//! the first kind: group law, dilations, homogeneous norm and invariant
//! vector fields.
//!
//! A group is described by its stratified Lie algebra: a graded basis
//! `e_1..e_N` with dilation weights `α_1..α_N` (weight 1 on the first,
//! "horizontal" layer of dimension `m`) and structure constants
//! `[e_i, e_j] = Σ_k c^k_{ij} e_k`. The composition law is the truncated
//! Baker-Campbell-Hausdorff series, which is exact on nilpotent algebras.

mod bch;
mod builtin;
mod io;

pub use builtin::{by_name, engel, euclidean, heisenberg1};
pub use io::GroupSpecFile;

use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// A point of the group, identified with `R^N` in exponential coordinates.
///
/// The identity element is the zero vector and inversion is coordinate
/// negation.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupPoint(pub Vec<f64>);

impl GroupPoint {
    pub fn zero(n: usize) -> Self {
        GroupPoint(vec![0.0; n])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        GroupPoint(self.0.iter().map(|v| -v).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl From<Vec<f64>> for GroupPoint {
    fn from(v: Vec<f64>) -> Self {
        GroupPoint(v)
    }
}

/// Stratified Lie-algebra data of a homogeneous Carnot group.
#[derive(Clone, Debug)]
pub struct CarnotGroupSpec {
    name: String,
    /// Ambient dimension N.
    n: usize,
    /// Horizontal dimension m = dim V_1.
    m: usize,
    /// Nilpotency step r.
    step: usize,
    /// Dimensions of the layers V_1..V_r.
    layer_dims: Vec<usize>,
    /// Dilation weights α_1..α_N (positive integers, nondecreasing).
    weights: Vec<u32>,
    /// Dense structure constants, `c[(i*n + j)*n + k] = c^k_{ij}` (0-based).
    c: Vec<f64>,
    /// Homogeneous dimension Q = Σ α_j.
    hom_dim: u32,
}

impl CarnotGroupSpec {
    /// Builds a spec from raw data and validates every structural invariant:
    /// weight grading, antisymmetry, the Jacobi identity, nilpotency and
    /// generation of the full algebra by the first layer.
    pub fn new(
        name: impl Into<String>,
        weights: Vec<u32>,
        brackets: &[(usize, usize, usize, f64)],
    ) -> Result<Self> {
        let n = weights.len();
        if n == 0 {
            return Err(Error::InvalidGroupSpec("empty weight list".into()));
        }
        if weights.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidGroupSpec(
                "dilation weights must be nondecreasing".into(),
            ));
        }
        if weights[0] != 1 {
            return Err(Error::InvalidGroupSpec("first weight must be 1".into()));
        }
        if weights.iter().any(|&w| w == 0) {
            return Err(Error::InvalidGroupSpec("weights must be positive".into()));
        }
        let m = weights.iter().take_while(|&&w| w == 1).count();
        let step = *weights.last().unwrap() as usize;
        if step > bch::MAX_STEP {
            return Err(Error::InvalidGroupSpec(format!(
                "nilpotency step {step} exceeds the supported BCH truncation (step {})",
                bch::MAX_STEP
            )));
        }
        let mut layer_dims = vec![0usize; step];
        for &w in &weights {
            layer_dims[w as usize - 1] += 1;
        }
        if layer_dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidGroupSpec(
                "every layer V_1..V_r must be nonempty".into(),
            ));
        }

        let mut c = vec![0.0; n * n * n];
        for &(i, j, k, v) in brackets {
            if i >= n || j >= n || k >= n {
                return Err(Error::InvalidGroupSpec(format!(
                    "bracket index out of range: ({i},{j},{k}) with N = {n}"
                )));
            }
            c[(i * n + j) * n + k] += v;
            c[(j * n + i) * n + k] -= v;
        }

        let spec = CarnotGroupSpec {
            name: name.into(),
            n,
            m,
            step,
            layer_dims,
            hom_dim: weights.iter().sum(),
            weights,
            c,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        let n = self.n;
        // Grading: c^k_{ij} = 0 unless α_k = α_i + α_j.
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let v = self.c[(i * n + j) * n + k];
                    if v != 0.0 && self.weights[k] != self.weights[i] + self.weights[j] {
                        return Err(Error::InvalidGroupSpec(format!(
                            "bracket [e_{},e_{}] has a component on e_{} violating the grading",
                            i + 1,
                            j + 1,
                            k + 1
                        )));
                    }
                }
            }
        }
        // Jacobi identity (antisymmetry holds by construction).
        let mut tmp1 = vec![0.0; n];
        let mut tmp2 = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for mm in 0..n {
                        let mut s = 0.0;
                        for l in 0..n {
                            s += self.c[(i * n + j) * n + l] * self.c[(l * n + k) * n + mm];
                            s += self.c[(j * n + k) * n + l] * self.c[(l * n + i) * n + mm];
                            s += self.c[(k * n + i) * n + l] * self.c[(l * n + j) * n + mm];
                        }
                        if s.abs() > 1e-12 {
                            return Err(Error::InvalidGroupSpec(format!(
                                "Jacobi identity fails on (e_{},e_{},e_{}): defect {s:.3e}",
                                i + 1,
                                j + 1,
                                k + 1
                            )));
                        }
                    }
                }
            }
        }
        // Nilpotency: an (r+1)-fold nested bracket of basis elements vanishes.
        // Grading already forces this; verify numerically on nested left
        // brackets [e_{i1},[e_{i2},[...e_{i_{r+1}}]]].
        for i in 0..n {
            let mut acc: Vec<Vec<f64>> = vec![basis_vec(n, i)];
            let mut next = Vec::new();
            for _ in 0..self.step {
                next.clear();
                for v in &acc {
                    for b in 0..n {
                        self.bracket_into(&basis_vec(n, b), v, &mut tmp1);
                        next.push(tmp1.clone());
                    }
                }
                std::mem::swap(&mut acc, &mut next);
            }
            for v in &acc {
                for b in 0..n {
                    self.bracket_into(&basis_vec(n, b), v, &mut tmp2);
                    if tmp2.iter().any(|x| x.abs() > 1e-10) {
                        return Err(Error::InvalidGroupSpec(
                            "nested brackets of depth r+1 do not vanish".into(),
                        ));
                    }
                }
            }
        }
        // Hörmander/generation: iterated brackets of the first layer span R^N.
        let mut span: Vec<Vec<f64>> = (0..self.m).map(|i| basis_vec(n, i)).collect();
        let mut frontier = span.clone();
        for _ in 1..self.step {
            let mut new_frontier = Vec::new();
            for v in &frontier {
                for i in 0..self.m {
                    self.bracket_into(&basis_vec(n, i), v, &mut tmp1);
                    new_frontier.push(tmp1.clone());
                }
            }
            span.extend(new_frontier.iter().cloned());
            frontier = new_frontier;
        }
        let mat = DMatrix::from_fn(n, span.len(), |r, c| span[c][r]);
        if mat.rank(1e-10) < n {
            return Err(Error::InvalidGroupSpec(
                "first layer does not generate the full Lie algebra".into(),
            ));
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Ambient dimension N.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Horizontal dimension m.
    pub fn horizontal_dim(&self) -> usize {
        self.m
    }

    /// Nilpotency step r.
    pub fn step(&self) -> usize {
        self.step
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    /// Homogeneous dimension Q = Σ_j α_j.
    pub fn homogeneous_dim(&self) -> u32 {
        self.hom_dim
    }

    pub fn is_abelian(&self) -> bool {
        self.step == 1
    }

    /// Structure constant c^k_{ij} (0-based indices).
    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c[(i * self.n + j) * self.n + k]
    }

    /// Lie bracket of algebra elements, `out = [x, y]`.
    pub fn bracket_into(&self, x: &[f64], y: &[f64], out: &mut Vec<f64>) {
        let n = self.n;
        out.clear();
        out.resize(n, 0.0);
        for i in 0..n {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for j in 0..n {
                let yj = y[j];
                if yj == 0.0 {
                    continue;
                }
                let base = (i * n + j) * n;
                for k in 0..n {
                    let c = self.c[base + k];
                    if c != 0.0 {
                        out[k] += xi * yj * c;
                    }
                }
            }
        }
    }

    pub fn bracket(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = Vec::new();
        self.bracket_into(x, y, &mut out);
        out
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Group composition `x ∘ y` via the BCH series truncated at the step.
    pub fn group_law(&self, x: &GroupPoint, y: &GroupPoint) -> Result<GroupPoint> {
        self.check_dim(&x.0)?;
        self.check_dim(&y.0)?;
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::Contract("non-finite group point".into()));
        }
        let mut out = vec![0.0; self.n];
        self.compose_into(&x.0, &y.0, &mut out);
        Ok(GroupPoint(out))
    }

    /// Slice-level composition used by hot loops; no validation.
    pub fn compose_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        bch::compose(self, x, y, out)
    }

    /// Dilation `D(λ)x`, scaling coordinate j by λ^{α_j}.
    pub fn dilate(&self, lambda: f64, x: &GroupPoint) -> Result<GroupPoint> {
        self.check_dim(&x.0)?;
        if !(lambda > 0.0) {
            return Err(Error::Domain(format!(
                "dilation parameter must be positive, got {lambda}"
            )));
        }
        let mut out = x.0.clone();
        self.dilate_into(lambda, &mut out);
        Ok(GroupPoint(out))
    }

    pub fn dilate_into(&self, lambda: f64, x: &mut [f64]) {
        for (v, &w) in x.iter_mut().zip(&self.weights) {
            *v *= lambda.powi(w as i32);
        }
    }

    /// Homogeneous norm `‖x‖ = (Σ_j |x_j|^{2r!/α_j})^{1/(2r!)}`, exactly
    /// 1-homogeneous under the dilations and smooth away from the origin.
    pub fn homogeneous_norm(&self, x: &[f64]) -> f64 {
        let d = 2.0 * factorial(self.step) as f64;
        let mut s = 0.0;
        for (v, &w) in x.iter().zip(&self.weights) {
            if *v != 0.0 {
                s += v.abs().powf(d / w as f64);
            }
        }
        s.powf(1.0 / d)
    }

    /// Jacobian of left translation: derivative of `y ↦ x ∘ y` at `y = 0`.
    /// Column j is the value at x of the left-invariant field extending e_j.
    pub fn left_translation_jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.n;
        let mut mat = DMatrix::zeros(n, n);
        let mut col = vec![0.0; n];
        for j in 0..n {
            self.left_invariant_field_into(x, j, &mut col);
            for i in 0..n {
                mat[(i, j)] = col[i];
            }
        }
        mat
    }

    /// Value at x of the left-invariant vector field extending basis element
    /// e_j: `v = e_j + ½[x, e_j] + (1/12)[x, [x, e_j]]` (exact at step ≤ 3).
    pub fn left_invariant_field_into(&self, x: &[f64], j: usize, out: &mut Vec<f64>) {
        bch::left_field(self, x, j, out)
    }

    /// Value at x of the right-invariant field extending e_j:
    /// `v = e_j - ½[x, e_j] + (1/12)[x, [x, e_j]]`.
    pub fn right_invariant_field_into(&self, x: &[f64], j: usize, out: &mut Vec<f64>) {
        bch::right_field(self, x, j, out)
    }

    /// N×m matrix whose column i holds the coefficients of the horizontal
    /// field Z_i at x. At the origin this is `[e_1 … e_m]`.
    pub fn horizontal_field_matrix(&self, x: &GroupPoint) -> Result<DMatrix<f64>> {
        self.check_dim(&x.0)?;
        if !x.is_finite() {
            return Err(Error::Contract("non-finite group point".into()));
        }
        let mut mat = DMatrix::zeros(self.n, self.m);
        let mut col = vec![0.0; self.n];
        for i in 0..self.m {
            self.left_invariant_field_into(&x.0, i, &mut col);
            for r in 0..self.n {
                mat[(r, i)] = col[r];
            }
        }
        Ok(mat)
    }

    /// N×m matrix of the right-invariant fields Z_i^R at x.
    pub fn right_field_matrix(&self, x: &GroupPoint) -> Result<DMatrix<f64>> {
        self.check_dim(&x.0)?;
        let mut mat = DMatrix::zeros(self.n, self.m);
        let mut col = vec![0.0; self.n];
        for i in 0..self.m {
            self.right_invariant_field_into(&x.0, i, &mut col);
            for r in 0..self.n {
                mat[(r, i)] = col[r];
            }
        }
        Ok(mat)
    }

    /// `[Z_i, Z_j]` at x (1-based horizontal indices would be off-by-one;
    /// indices here are 0-based), realized through the structure constants:
    /// the bracket of left-invariant fields is the left-invariant field of
    /// the algebra bracket.
    pub fn commutator_field(&self, i: usize, j: usize, x: &GroupPoint) -> Result<Vec<f64>> {
        if i >= self.m || j >= self.m {
            return Err(Error::Domain(format!(
                "horizontal index out of range: ({i},{j}) with m = {}",
                self.m
            )));
        }
        self.check_dim(&x.0)?;
        let n = self.n;
        let mut alg = vec![0.0; n];
        for k in 0..n {
            alg[k] = self.c[(i * n + j) * n + k];
        }
        // Push the algebra element through the left-translation Jacobian.
        let jac = self.left_translation_jacobian(&x.0);
        let mut out = vec![0.0; n];
        for r in 0..n {
            for k in 0..n {
                out[r] += jac[(r, k)] * alg[k];
            }
        }
        Ok(out)
    }

    /// Derivative of `y ↦ x ∘ y` at a general y (used by the unimodularity
    /// checks: Haar measure is Lebesgue measure iff this has unit determinant).
    pub fn law_jacobian_y(&self, x: &[f64], y: &[f64]) -> DMatrix<f64> {
        bch::law_jacobian_y(self, x, y)
    }

    /// Derivative of `x ↦ x ∘ y` at a general x.
    pub fn law_jacobian_x(&self, x: &[f64], y: &[f64]) -> DMatrix<f64> {
        bch::law_jacobian_x(self, x, y)
    }

    /// `(Z_i' Z_i)(x)`: the Euclidean Jacobian of the polynomial map
    /// `x ↦ Z_i(x)` applied to `Z_i(x)` itself, in closed form from the
    /// brackets. This is the Stratonovich-to-Itô correction of the diffusion.
    pub fn field_self_derivative(&self, i: usize, x: &[f64]) -> Vec<f64> {
        bch::field_self_derivative(self, i, x)
    }
}

pub(crate) fn basis_vec(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

fn factorial(k: usize) -> usize {
    (1..=k).product::<usize>().max(1)
}

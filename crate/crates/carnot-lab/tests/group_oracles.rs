//! Group-algebra oracles: the Heisenberg matrix representation (an
//! independent model of the same group), finite-difference commutators of
//! the coordinate fields, and the axioms/unimodularity/nilpotency invariants
//! on random tuples.

use carnot_lab::group::{engel, euclidean, heisenberg1, CarnotGroupSpec, GroupPoint};
use carnot_lab::rng::{fill_standard_normal, stream_rng};
use proptest::prelude::*;

/// Upper-triangular 3×3 representation of H¹: (x, y, z) maps to the matrix
/// with first row (1, x, z + xy/2), second (0, 1, y). Matrix product gives
/// the group law independently of the BCH code path.
mod h1_matrix {
    pub fn to_matrix(p: &[f64]) -> [[f64; 3]; 3] {
        [
            [1.0, p[0], p[2] + p[0] * p[1] / 2.0],
            [0.0, 1.0, p[1]],
            [0.0, 0.0, 1.0],
        ]
    }

    pub fn mul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
        let mut c = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    c[i][j] += a[i][k] * b[k][j];
                }
            }
        }
        c
    }

    pub fn to_coords(m: &[[f64; 3]; 3]) -> [f64; 3] {
        let x = m[0][1];
        let y = m[1][2];
        [x, y, m[0][2] - x * y / 2.0]
    }
}

fn random_point(g: &CarnotGroupSpec, rng: &mut rand_chacha::ChaCha8Rng, scale: f64) -> GroupPoint {
    let mut v = vec![0.0; g.dim()];
    fill_standard_normal(rng, &mut v);
    for x in v.iter_mut() {
        *x *= scale;
    }
    GroupPoint(v)
}

#[test]
fn heisenberg_law_matches_matrix_representation() {
    let g = heisenberg1();
    let mut rng = stream_rng(0xabc, 0);
    for _ in 0..500 {
        let a = random_point(&g, &mut rng, 1.5);
        let b = random_point(&g, &mut rng, 1.5);
        let ab = g.group_law(&a, &b).unwrap();
        let oracle = h1_matrix::to_coords(&h1_matrix::mul(
            &h1_matrix::to_matrix(a.coords()),
            &h1_matrix::to_matrix(b.coords()),
        ));
        for j in 0..3 {
            assert!(
                (ab.0[j] - oracle[j]).abs() < 1e-12,
                "component {j}: {} vs {}",
                ab.0[j],
                oracle[j]
            );
        }
    }
    // The spec example is exact: (1,0,0)∘(0,1,0) = (1,1,½).
    let e = g
        .group_law(
            &GroupPoint(vec![1.0, 0.0, 0.0]),
            &GroupPoint(vec![0.0, 1.0, 0.0]),
        )
        .unwrap();
    assert_eq!(e.0, vec![1.0, 1.0, 0.5]);
}

#[test]
fn horizontal_fields_match_matrix_curves() {
    // d/dt [x ∘ (t e_i)] at t=0 via the matrix representation.
    let g = heisenberg1();
    let mut rng = stream_rng(0xdef, 0);
    let h = 1e-6;
    for _ in 0..100 {
        let x = random_point(&g, &mut rng, 1.2);
        let z = g.horizontal_field_matrix(&x).unwrap();
        for i in 0..2 {
            let mut step = vec![0.0; 3];
            step[i] = h;
            let plus = h1_matrix::to_coords(&h1_matrix::mul(
                &h1_matrix::to_matrix(x.coords()),
                &h1_matrix::to_matrix(&step),
            ));
            step[i] = -h;
            let minus = h1_matrix::to_coords(&h1_matrix::mul(
                &h1_matrix::to_matrix(x.coords()),
                &h1_matrix::to_matrix(&step),
            ));
            for r in 0..3 {
                let fd = (plus[r] - minus[r]) / (2.0 * h);
                assert!((z[(r, i)] - fd).abs() < 1e-8);
            }
        }
    }
}

/// FD commutator of coordinate vector fields:
/// `[Z_i, Z_j] = DZ_j·Z_i - DZ_i·Z_j` with Jacobians by central differences.
fn fd_commutator(g: &CarnotGroupSpec, i: usize, j: usize, x: &[f64]) -> Vec<f64> {
    let n = g.dim();
    let h = 1e-5;
    let field = |idx: usize, at: &[f64]| -> Vec<f64> {
        let mut out = Vec::new();
        g.left_invariant_field_into(at, idx, &mut out);
        out
    };
    let jac = |idx: usize| -> Vec<Vec<f64>> {
        let mut cols = Vec::with_capacity(n);
        for c in 0..n {
            let mut xp = x.to_vec();
            xp[c] += h;
            let mut xm = x.to_vec();
            xm[c] -= h;
            let fp = field(idx, &xp);
            let fm = field(idx, &xm);
            cols.push((0..n).map(|r| (fp[r] - fm[r]) / (2.0 * h)).collect());
        }
        cols
    };
    let dzi = jac(i);
    let dzj = jac(j);
    let zi = field(i, x);
    let zj = field(j, x);
    let mut out = vec![0.0; n];
    for r in 0..n {
        for c in 0..n {
            out[r] += dzj[c][r] * zi[c] - dzi[c][r] * zj[c];
        }
    }
    out
}

#[test]
fn commutators_match_fd_flows() {
    // Structure-constant commutator vs the FD commutator, < 1e-6.
    let mut rng = stream_rng(0x77, 0);
    for g in [heisenberg1(), engel()] {
        for _ in 0..50 {
            let x = random_point(&g, &mut rng, 1.0);
            for i in 0..g.horizontal_dim() {
                for j in 0..g.horizontal_dim() {
                    let exact = g.commutator_field(i, j, &x).unwrap();
                    let fd = fd_commutator(&g, i, j, x.coords());
                    for r in 0..g.dim() {
                        assert!(
                            (exact[r] - fd[r]).abs() < 1e-6,
                            "{} [{i},{j}] comp {r}: {} vs {}",
                            g.name(),
                            exact[r],
                            fd[r]
                        );
                    }
                }
            }
        }
    }
    // H¹: [Z_1,Z_2] = (0,0,1); Engel: [Z_1,[Z_1,Z_2]] ∝ e_4 via nested FD.
    let h1 = heisenberg1();
    let c = h1
        .commutator_field(0, 1, &GroupPoint(vec![0.4, -0.9, 2.0]))
        .unwrap();
    assert!((c[2] - 1.0).abs() < 1e-12 && c[0].abs() < 1e-12 && c[1].abs() < 1e-12);
}

#[test]
fn group_axioms_on_random_tuples() {
    // Associativity, identity, inverse at 1e-10 over 1000 random triples
    // per built-in group.
    let groups = [
        euclidean(1),
        euclidean(2),
        euclidean(3),
        heisenberg1(),
        engel(),
    ];
    for g in &groups {
        let mut rng = stream_rng(0x5eed ^ g.dim() as u64, 1);
        let id = GroupPoint::zero(g.dim());
        for _ in 0..1000 {
            let a = random_point(g, &mut rng, 1.3);
            let b = random_point(g, &mut rng, 1.3);
            let c = random_point(g, &mut rng, 1.3);
            let ab_c = g.group_law(&g.group_law(&a, &b).unwrap(), &c).unwrap();
            let a_bc = g.group_law(&a, &g.group_law(&b, &c).unwrap()).unwrap();
            for (u, v) in ab_c.0.iter().zip(&a_bc.0) {
                assert!((u - v).abs() < 1e-10, "associativity on {}", g.name());
            }
            let ae = g.group_law(&a, &id).unwrap();
            assert!(ae
                .0
                .iter()
                .zip(&a.0)
                .all(|(u, v)| (u - v).abs() < 1e-12));
            let inv = g.group_law(&a, &a.inverse()).unwrap();
            assert!(inv.0.iter().all(|v| v.abs() < 1e-10));
        }
    }
}

#[test]
fn haar_measure_is_lebesgue() {
    // |det ∂(x∘y)/∂y - 1| < 1e-10 and the same in x.
    let mut rng = stream_rng(0x99, 0);
    for g in [euclidean(3), heisenberg1(), engel()] {
        for _ in 0..200 {
            let x = random_point(&g, &mut rng, 1.5);
            let y = random_point(&g, &mut rng, 1.5);
            let dy = g.law_jacobian_y(x.coords(), y.coords()).determinant();
            let dx = g.law_jacobian_x(x.coords(), y.coords()).determinant();
            assert!((dy - 1.0).abs() < 1e-10, "{}: det_y {dy}", g.name());
            assert!((dx - 1.0).abs() < 1e-10, "{}: det_x {dx}", g.name());
        }
    }
}

#[test]
fn dilations_are_automorphisms() {
    // D(λ)(x∘y) = D(λ)x ∘ D(λ)y at 1e-12 on 1000 random pairs, and the
    // semigroup law D(λμ) = D(λ)D(μ).
    let g = engel();
    let mut rng = stream_rng(0x31415, 0);
    for _ in 0..1000 {
        let x = random_point(&g, &mut rng, 1.0);
        let y = random_point(&g, &mut rng, 1.0);
        let lambda = 0.3 + 2.0 * rand::Rng::gen::<f64>(&mut rng);
        let lhs = g.dilate(lambda, &g.group_law(&x, &y).unwrap()).unwrap();
        let rhs = g
            .group_law(&g.dilate(lambda, &x).unwrap(), &g.dilate(lambda, &y).unwrap())
            .unwrap();
        for (u, v) in lhs.0.iter().zip(&rhs.0) {
            assert!((u - v).abs() < 1e-12 * (1.0 + u.abs()));
        }
        let a = g
            .dilate(lambda, &g.dilate(2.0, &x).unwrap())
            .unwrap();
        let b = g.dilate(2.0 * lambda, &x).unwrap();
        for (u, v) in a.0.iter().zip(&b.0) {
            assert!((u - v).abs() < 1e-12 * (1.0 + u.abs()));
        }
    }
}

#[test]
fn nilpotency_of_nested_numeric_brackets() {
    // Depth r+1 nested brackets of random algebra vectors vanish below 1e-10.
    let mut rng = stream_rng(0x808, 0);
    for g in [heisenberg1(), engel()] {
        for _ in 0..200 {
            let mut acc = random_point(&g, &mut rng, 1.0).0;
            for _ in 0..g.step() {
                let v = random_point(&g, &mut rng, 1.0).0;
                acc = g.bracket(&v, &acc);
            }
            // acc has depth r+1 counting the initial vector: one more.
            let v = random_point(&g, &mut rng, 1.0).0;
            let top = g.bracket(&v, &acc);
            assert!(top.iter().all(|u| u.abs() < 1e-10));
        }
    }
}

#[test]
fn left_invariance_of_horizontal_fields() {
    // (Z_i f)(g∘x) = Z_i(f∘L_g)(x) on random polynomials, FD tolerance.
    let g = heisenberg1();
    let mut rng = stream_rng(0xf00d, 0);
    let h = 1e-6;
    let poly = |c: &[f64], p: &[f64]| -> f64 {
        c[0] * p[0] + c[1] * p[1] + c[2] * p[2] + c[3] * p[0] * p[1] + c[4] * p[2] * p[0]
    };
    for _ in 0..100 {
        let mut c = vec![0.0; 5];
        fill_standard_normal(&mut rng, &mut c);
        let base = random_point(&g, &mut rng, 1.0);
        let x = random_point(&g, &mut rng, 1.0);
        let gx = g.group_law(&base, &x).unwrap();
        for i in 0..2 {
            // LHS: (Z_i f)(g∘x) by FD along the flow at g∘x.
            let mut step = vec![0.0; 3];
            step[i] = h;
            let p = g.group_law(&gx, &GroupPoint(step.clone())).unwrap();
            step[i] = -h;
            let m = g.group_law(&gx, &GroupPoint(step.clone())).unwrap();
            let lhs = (poly(&c, &p.0) - poly(&c, &m.0)) / (2.0 * h);
            // RHS: Z_i (f∘L_g)(x).
            step[i] = h;
            let p2 = g
                .group_law(&base, &g.group_law(&x, &GroupPoint(step.clone())).unwrap())
                .unwrap();
            step[i] = -h;
            let m2 = g
                .group_law(&base, &g.group_law(&x, &GroupPoint(step.clone())).unwrap())
                .unwrap();
            let rhs = (poly(&c, &p2.0) - poly(&c, &m2.0)) / (2.0 * h);
            assert!((lhs - rhs).abs() < 1e-7, "{lhs} vs {rhs}");
        }
    }
}

#[test]
fn field_homogeneity_under_dilation() {
    // Z_i(f∘D_λ) = λ·(Z_i f)∘D_λ on random polynomials.
    let g = heisenberg1();
    let mut rng = stream_rng(0xbeef, 0);
    let h = 1e-6;
    let poly =
        |c: &[f64], p: &[f64]| -> f64 { c[0] * p[0] + c[1] * p[1] * p[1] + c[2] * p[2] };
    for _ in 0..100 {
        let mut c = vec![0.0; 3];
        fill_standard_normal(&mut rng, &mut c);
        let x = random_point(&g, &mut rng, 0.8);
        let lambda = 1.7;
        for i in 0..2 {
            let zfd = |at: &GroupPoint, f: &dyn Fn(&[f64]) -> f64| -> f64 {
                let mut step = vec![0.0; 3];
                step[i] = h;
                let p = g.group_law(at, &GroupPoint(step.clone())).unwrap();
                step[i] = -h;
                let m = g.group_law(at, &GroupPoint(step)).unwrap();
                (f(&p.0) - f(&m.0)) / (2.0 * h)
            };
            let f_dil = |p: &[f64]| -> f64 {
                let q = g.dilate(lambda, &GroupPoint(p.to_vec())).unwrap();
                poly(&c, &q.0)
            };
            let lhs = zfd(&x, &f_dil);
            let dx = g.dilate(lambda, &x).unwrap();
            let rhs = lambda * zfd(&dx, &|p| poly(&c, p));
            assert!((lhs - rhs).abs() < 1e-6, "{lhs} vs {rhs}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norm_homogeneity_random(
        coords in prop::collection::vec(-3.0f64..3.0, 4),
        lambda in 0.1f64..5.0,
    ) {
        let g = engel();
        let x = GroupPoint(coords);
        let n1 = g.homogeneous_norm(x.coords());
        let d = g.dilate(lambda, &x).unwrap();
        let n2 = g.homogeneous_norm(d.coords());
        prop_assert!((n2 - lambda * n1).abs() < 1e-11 * (1.0 + n1));
    }

    #[test]
    fn inverse_is_always_negation(coords in prop::collection::vec(-5.0f64..5.0, 3)) {
        let g = heisenberg1();
        let x = GroupPoint(coords);
        let e = g.group_law(&x, &x.inverse()).unwrap();
        prop_assert!(e.0.iter().all(|v| v.abs() < 1e-12));
    }
}

//! Function-space oracles: symbolic-derivative checks, the mollifier
//! commutator estimate, the convolution-derivative identity, and the
//! admissibility monotonicity property.

use carnot_lab::fields::{
    check_admissibility, group_convolve_point, horizontal_derivative, mixed_norm, mollify,
    right_horizontal_derivative, sobolev_norm, DriftComponent, DriftExpr, DriftSpec, GridField,
    Mollifier, SpaceTimeGrid, SpatialGrid,
};
use carnot_lab::group::heisenberg1;
use proptest::prelude::*;
use std::sync::Arc;

fn h1_grid(bound: f64, n: usize) -> Arc<SpaceTimeGrid> {
    let space = SpatialGrid::cube(3, bound, n);
    let delta = space.spacing(0);
    Arc::new(SpaceTimeGrid::new(0.5, 3, space, delta).unwrap())
}

#[test]
fn sobolev_norm_of_coordinate_bump_sees_unit_derivative() {
    // f = x_1 on a flat-top region: Z_1 f = 1 there, so the k=1 norm gains
    // at least the measure of the plateau over the k=0 norm.
    let g = heisenberg1();
    let grid = h1_grid(2.0, 21);
    let plateau = |x: &[f64]| {
        let r: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r <= 0.8 {
            1.0
        } else if r >= 1.6 {
            0.0
        } else {
            let u = (r - 0.8) / 0.8;
            (1.0 - 1.0 / (1.0 - u * u)).exp()
        }
    };
    let f = GridField::from_fn(grid.clone(), |_, x| x[0] * plateau(x));
    let d = horizontal_derivative(&g, &f, 0, grid.fd_step);
    // Spot-check Z_1 f ≈ 1 on the plateau.
    for x in [[0.0, 0.0, 0.0], [0.3, -0.2, 0.1], [-0.4, 0.3, 0.2]] {
        let v = d.eval(0.0, &x);
        assert!((v - 1.0).abs() < 5e-2, "Z_1 f at {x:?} = {v}");
    }
    let n0 = sobolev_norm(&g, &f, 0, 2.0, 2.0).unwrap();
    let n1 = sobolev_norm(&g, &f, 1, 2.0, 2.0).unwrap();
    assert!(n1 > n0 + 0.3, "k=1 norm {n1} barely above k=0 {n0}");
}

#[test]
fn mollifier_commutator_shrinks() {
    // ‖φ_n∗(b¹ Z_1 w) - b¹ Z_1(φ_n∗w)‖ decreasing in n on smooth data.
    let g = heisenberg1();
    let grid = h1_grid(2.0, 13);
    let b1 = GridField::from_fn(grid.clone(), |_, x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        (-1.5 * r2).exp()
    });
    let w = GridField::from_fn(grid.clone(), |_, x| {
        (x[0] + 0.5 * x[1]).sin() * (-x.iter().map(|v| v * v).sum::<f64>()).exp()
    });
    let phi = Mollifier::new(&g, 0.5);
    let delta = grid.fd_step;
    let z1w = horizontal_derivative(&g, &w, 0, delta);
    let mut b_z1w = z1w.clone();
    b_z1w
        .values_mut()
        .zip_mut_with(b1.values(), |a, b| *a *= b);

    let mut norms = Vec::new();
    for n in [2.0, 4.0, 8.0] {
        let lhs = mollify(&g, &b_z1w, n, &phi);
        let smoothed_w = mollify(&g, &w, n, &phi);
        let mut rhs = horizontal_derivative(&g, &smoothed_w, 0, delta);
        rhs.values_mut().zip_mut_with(b1.values(), |a, b| *a *= b);
        let mut diff = lhs;
        diff.axpy(-1.0, &rhs);
        norms.push(mixed_norm(&diff, 2.0, 2.0).unwrap());
    }
    assert!(
        norms[0] > norms[1] && norms[1] > norms[2],
        "commutator norms {norms:?}"
    );
}

#[test]
fn convolution_derivative_identity() {
    // (Z_i f)∗g = f∗(Z_i^R g) to quadrature tolerance, on a smooth f
    // (callable, derivative known to FD accuracy) and a gridded g.
    let g1 = heisenberg1();
    let grid = h1_grid(2.5, 21);
    let kernel = GridField::from_fn(grid.clone(), |_, x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        (-2.0 * r2).exp()
    });
    let delta = grid.fd_step;
    let zr_kernel = right_horizontal_derivative(&g1, &kernel, 0, delta);

    let f = |x: &[f64]| -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        (-1.2 * r2).exp() * (1.0 + 0.5 * x[0])
    };
    // Z_1 f by FD along the flow (analytic-quality for smooth f).
    let z1f = |x: &[f64]| -> f64 {
        let h = 1e-5;
        let mut pstep = vec![h, 0.0, 0.0];
        let mut out_p = vec![0.0; 3];
        g1.compose_into(x, &pstep, &mut out_p);
        pstep[0] = -h;
        let mut out_m = vec![0.0; 3];
        g1.compose_into(x, &pstep, &mut out_m);
        (f(&out_p) - f(&out_m)) / (2.0 * h)
    };
    for x in [[0.0, 0.0, 0.0], [0.4, 0.2, -0.1], [-0.5, 0.6, 0.2]] {
        let lhs = group_convolve_point(&g1, &z1f, &kernel, 0, &x);
        let rhs = group_convolve_point(&g1, &f, &zr_kernel, 0, &x);
        assert!(
            (lhs - rhs).abs() < 2e-2 * (1.0 + lhs.abs()),
            "at {x:?}: {lhs} vs {rhs}"
        );
    }
}

#[test]
fn admissibility_examples() {
    let g = heisenberg1();
    let grid = h1_grid(2.0, 13);
    let drift = |p: f64, q: f64| {
        DriftSpec::new(
            vec![
                DriftComponent::Expr(DriftExpr::SingularBump {
                    amplitude: 1.0,
                    gamma: 0.3,
                    floor: 0.25,
                    radius: 1.2,
                }),
                DriftComponent::Expr(DriftExpr::Zero),
            ],
            p,
            q,
        )
    };
    let ok = check_admissibility(&drift(9.0, 9.0), &g, grid.clone()).unwrap();
    assert!(ok.verdict.passed());
    assert!(ok.exponent_margin > 0.3);
    let bad = check_admissibility(&drift(5.0, 5.0), &g, grid).unwrap();
    assert!(!bad.verdict.passed());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn admissibility_exponent_condition_is_monotone(
        p in 2.0f64..30.0,
        q in 2.0f64..30.0,
        dp in 0.0f64..10.0,
        dq in 0.0f64..10.0,
    ) {
        // If (p, q) satisfies 2/q + Q/p < 1 then so does any (p+dp, q+dq).
        let g = heisenberg1();
        let big_q = g.homogeneous_dim() as f64;
        let ok = 2.0 / q + big_q / p < 1.0;
        if ok {
            prop_assert!(2.0 / (q + dq) + big_q / (p + dp) < 1.0);
        }
    }
}

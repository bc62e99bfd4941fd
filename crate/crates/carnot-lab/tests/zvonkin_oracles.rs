//! Zvonkin-map oracles: round trips, the diffusion-column matrix identity,
//! the conjugated-coefficient FD oracle, the dense-sampling Lipschitz bound,
//! and exact conjugation on the abelian case.

use carnot_lab::fields::{DriftComponent, DriftExpr, DriftSpec, SpaceTimeGrid, SpatialGrid};
use carnot_lab::group::{euclidean, heisenberg1, CarnotGroupSpec};
use carnot_lab::pde::SolverOptions;
use carnot_lab::rng::{fill_standard_normal, stream_rng};
use carnot_lab::zvonkin::{
    build_map, conjugation_consistency, injectivity_check, lipschitz_probe, ZvonkinMap,
};
use std::sync::Arc;

fn smooth_map_euclidean() -> (CarnotGroupSpec, DriftSpec, ZvonkinMap) {
    let g = euclidean(1);
    let space = SpatialGrid::cube(1, 4.0, 81);
    let delta = space.spacing(0);
    let grid = Arc::new(SpaceTimeGrid::new(0.5, 21, space, delta).unwrap());
    let drift = DriftSpec::new(
        vec![DriftComponent::Expr(DriftExpr::Bump {
            amplitude: 0.9,
            radius: 1.5,
        })],
        9.0,
        9.0,
    );
    let map = build_map(&g, &drift, grid, &[0.0], 0.25, &SolverOptions::default()).unwrap();
    (g, drift, map)
}

#[test]
fn round_trip_inversion_on_random_points() {
    let (_, _, map) = smooth_map_euclidean();
    let grid = map.solution.components[0].grid().clone();
    let mut rng = stream_rng(0xfeed, 0);
    let mut draw = [0.0];
    let radius = map.omega_radius();
    let mut phi = Vec::new();
    for k in 0..grid.n_t {
        let t = grid.time(k);
        for _ in 0..20 {
            fill_standard_normal(&mut rng, &mut draw);
            let x = [(draw[0] * 0.3).clamp(-0.95, 0.95) * radius];
            map.apply(t, &x, &mut phi);
            let back = map.invert(t, &phi).unwrap();
            assert!(
                (back[0] - x[0]).abs() < 1e-8,
                "round trip at t={t}: {} vs {}",
                back[0],
                x[0]
            );
        }
    }
    assert!(injectivity_check(&map, 16, 9).unwrap());
}

#[test]
fn gradient_certificates_sit_in_the_band() {
    let (_, _, map) = smooth_map_euclidean();
    let (fwd, inv) = map.grad_bounds;
    let tol = carnot_lab::zvonkin::GRAD_CERT_TOL;
    assert!(fwd >= 0.5 - tol && fwd <= 2.0 + tol, "forward {fwd}");
    assert!(inv >= 0.5 - tol && inv <= 2.0 + tol, "inverse {inv}");
}

#[test]
fn diffusion_columns_match_the_jacobian_identity() {
    // σ̃ at Φ(t,x) equals (I + ∇u)·Z_i(x): the left side comes from the
    // group-FD fields Z_i u, the right from the Euclidean-FD Jacobian —
    // two different code paths for the same matrix.
    let g = heisenberg1();
    let space = SpatialGrid::cube(3, 1.6, 13);
    let delta = space.spacing(0);
    let grid = Arc::new(SpaceTimeGrid::new(0.5, 11, space, delta).unwrap());
    let drift = DriftSpec::new(
        vec![
            DriftComponent::Expr(DriftExpr::Bump {
                amplitude: 0.5,
                radius: 1.0,
            }),
            DriftComponent::Expr(DriftExpr::Zero),
        ],
        9.0,
        9.0,
    );
    let map = build_map(&g, &drift, grid, &[0.0; 3], 0.25, &SolverOptions::default()).unwrap();
    let t = 0.2;
    let x = [0.25, -0.2, 0.1];
    let mut y = Vec::new();
    map.apply(t, &x, &mut y);
    let (_, sigma) = carnot_lab::zvonkin::conjugated_coeffs(&map, &g, t, &y).unwrap();

    // Euclidean-FD Jacobian of u at (t, x).
    let h = 1e-4;
    let n = 3;
    let mut jac = vec![vec![0.0; n]; n]; // jac[r][c] = ∂u_r/∂x_c
    for c in 0..n {
        let mut xp = x.to_vec();
        xp[c] += h;
        let mut xm = x.to_vec();
        xm[c] -= h;
        let mut up = Vec::new();
        let mut um = Vec::new();
        map.u_vector(t, &xp, &mut up);
        map.u_vector(t, &xm, &mut um);
        for r in 0..n {
            jac[r][c] = (up[r] - um[r]) / (2.0 * h);
        }
    }
    let zmat = g
        .horizontal_field_matrix(&carnot_lab::group::GroupPoint(x.to_vec()))
        .unwrap();
    for i in 0..2 {
        for r in 0..n {
            let mut want = zmat[(r, i)];
            for c in 0..n {
                want += jac[r][c] * zmat[(c, i)];
            }
            assert!(
                (sigma[i][r] - want).abs() < 5e-2,
                "σ̃[{i}][{r}] = {} vs (I+∇u)Z = {want}",
                sigma[i][r]
            );
        }
    }
}

#[test]
fn lipschitz_probe_within_dense_oracle() {
    // Dense sampling of b̃ = λu∘Φ^{-1} (+ vanishing correction on R) bounds
    // the Lipschitz constant; the probe must land within 2× of it.
    let (g, _, map) = smooth_map_euclidean();
    let rep = lipschitz_probe(&map, &g, 400, 3, 0.5).unwrap();
    assert!(rep.verdict.passed(), "{rep:?}");

    // Dense oracle: maximum slope of b̃ over a fine 1-D sweep of Ω at the
    // stored times.
    let grid = map.solution.components[0].grid().clone();
    let radius = map.omega_radius() * 0.98;
    let sweep = 4001usize;
    let mut dense: f64 = 0.0;
    let mut phi = Vec::new();
    for k in 0..grid.n_t {
        let t = grid.time(k);
        let mut prev: Option<(f64, f64)> = None;
        for s in 0..sweep {
            let x = [-radius + 2.0 * radius * s as f64 / (sweep - 1) as f64];
            let (b, _) = carnot_lab::zvonkin::conjugated_coeffs_at_preimage(&map, &g, t, &x);
            map.apply(t, &x, &mut phi);
            if let Some((py, pb)) = prev {
                let dy = (phi[0] - py).abs();
                if dy > 1e-12 {
                    dense = dense.max((b[0] - pb).abs() / dy);
                }
            }
            prev = Some((phi[0], b[0]));
        }
    }
    assert!(
        rep.estimate_4x <= 2.0 * dense + 1e-12 && dense <= 2.0 * rep.estimate_4x + 1e-12,
        "probe {} vs dense {dense}",
        rep.estimate_4x
    );
}

#[test]
fn abelian_zero_drift_conjugation_is_exact() {
    // b = 0 on R²: Φ = id and the conjugated SDE is the original one, so X
    // and Y agree exactly at every level.
    let g = euclidean(2);
    let space = SpatialGrid::cube(2, 3.0, 17);
    let delta = space.spacing(0);
    let grid = Arc::new(SpaceTimeGrid::new(0.5, 11, space, delta).unwrap());
    let drift = DriftSpec::zero(2, 9.0, 9.0);
    let map = build_map(&g, &drift, grid, &[0.0; 2], 0.25, &SolverOptions::default()).unwrap();
    let rep = conjugation_consistency(
        &map,
        &g,
        &drift,
        &[0.0; 2],
        &[50, 100],
        40,
        13,
        0.4,
        "abelian-zero",
    )
    .unwrap();
    assert!(rep.verdict.passed());
    for d in &rep.defects {
        assert!(*d < 1e-12, "defect {d}");
    }
}

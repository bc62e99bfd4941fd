//! Parabolic Sobolev embedding as a scaling law: the embedding constant
//! grows like T^α with α = ½[(k+2-l+2/q₁+Q/p₁) - (2/q+Q/p)], measured across
//! a family of horizons and checked one-sidedly (upper-bound semantics).

use super::GridField;
use crate::error::{Error, Result};
use crate::fields::derivative::time_derivative;
use crate::fields::norms::sobolev_norm;
use crate::group::CarnotGroupSpec;
use crate::report::{ScalingReport, Verdict};
use crate::stats::log_log_slope;

#[derive(Clone, Copy, Debug)]
pub struct EmbeddingExponents {
    pub k: usize,
    pub l: usize,
    pub q: f64,
    pub p: f64,
    pub q1: f64,
    pub p1: f64,
}

impl EmbeddingExponents {
    fn validate(&self, group: &CarnotGroupSpec) -> Result<()> {
        if self.l > self.k + 1 {
            return Err(Error::Domain(format!(
                "target order l = {} exceeds k+1 = {}",
                self.l,
                self.k + 1
            )));
        }
        if !(1.0 <= self.p && self.p <= self.p1) || !(1.0 <= self.q && self.q <= self.q1) {
            return Err(Error::Domain(
                "need 1 ≤ p ≤ p₁ ≤ ∞ and 1 ≤ q ≤ q₁ ≤ ∞".into(),
            ));
        }
        let big_q = group.homogeneous_dim() as f64;
        let lhs = 2.0 / self.q + big_q / self.p;
        let rhs = (self.k + 2 - self.l) as f64 + inv(self.q1) * 2.0 + big_q * inv(self.p1);
        if !(lhs < rhs) {
            return Err(Error::Domain(format!(
                "embedding condition fails: 2/q + Q/p = {lhs} ≥ {rhs}"
            )));
        }
        Ok(())
    }
}

fn inv(e: f64) -> f64 {
    if e.is_infinite() {
        0.0
    } else {
        1.0 / e
    }
}

/// α = ½[(k+2-l+2/q₁+Q/p₁) - (2/q+Q/p)].
pub fn embedding_alpha(group: &CarnotGroupSpec, e: &EmbeddingExponents) -> f64 {
    let big_q = group.homogeneous_dim() as f64;
    0.5 * (((e.k + 2 - e.l) as f64 + 2.0 * inv(e.q1) + big_q * inv(e.p1))
        - (2.0 / e.q + big_q / e.p))
}

/// Measures `‖u‖_{S^{l,(q₁,p₁)}} / (‖u‖_{S^{k+2,(q,p)}} + ‖u_t‖_{S^{k,(q,p)}})`
/// across a horizon family and fits the T-slope; passes if the fitted slope
/// is ≤ α + tolerance.
pub fn embedding_scaling_test(
    group: &CarnotGroupSpec,
    family: &[(f64, GridField)],
    exponents: &EmbeddingExponents,
    tolerance: f64,
) -> Result<ScalingReport> {
    exponents.validate(group)?;
    if family.len() < 2 {
        return Err(Error::Contract(
            "need at least two horizons to fit a slope".into(),
        ));
    }
    let alpha = embedding_alpha(group, exponents);
    let mut horizons = Vec::new();
    let mut ratios = Vec::new();
    for (t_j, u) in family {
        let u0_max = u
            .time_slice(0)
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        if u0_max > 1e-10 {
            return Err(Error::Contract(format!(
                "embedding requires u(0,·) = 0; got sup {u0_max:.3e}"
            )));
        }
        let lhs = sobolev_norm(group, u, exponents.l, exponents.q1, exponents.p1)?;
        let u_t = time_derivative(u);
        let rhs = sobolev_norm(group, u, exponents.k + 2, exponents.q, exponents.p)?
            + sobolev_norm(group, &u_t, exponents.k, exponents.q, exponents.p)?;
        if rhs == 0.0 {
            // u ≡ 0: ratio defined as 0, passes vacuously.
            horizons.push(*t_j);
            ratios.push(0.0);
            continue;
        }
        horizons.push(*t_j);
        ratios.push(lhs / rhs);
    }
    if ratios.iter().all(|r| *r == 0.0) {
        return Ok(ScalingReport {
            abscissae: horizons,
            values: ratios,
            fitted_slope: 0.0,
            expected_slope: alpha,
            tolerance,
            one_sided: true,
            verdict: Verdict::Pass,
        });
    }
    if ratios.iter().any(|r| *r <= 0.0) {
        return Err(Error::Estimation(
            "ratio vanished on part of the family; cannot fit a slope".into(),
        ));
    }
    let slope = log_log_slope(&horizons, &ratios);
    Ok(ScalingReport {
        abscissae: horizons,
        values: ratios,
        fitted_slope: slope,
        expected_slope: alpha,
        tolerance,
        one_sided: true,
        verdict: Verdict::from_bool(slope <= alpha + tolerance),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{SpaceTimeGrid, SpatialGrid};
    use crate::group::{euclidean, heisenberg1};
    use std::sync::Arc;

    #[test]
    fn alpha_formula_instances() {
        let e = EmbeddingExponents {
            k: 0,
            l: 0,
            q: 9.0,
            p: 9.0,
            q1: f64::INFINITY,
            p1: f64::INFINITY,
        };
        let a_h1 = embedding_alpha(&heisenberg1(), &e);
        assert!((a_h1 - 2.0 / 3.0).abs() < 1e-14);
        let a_e1 = embedding_alpha(&euclidean(1), &e);
        assert!((a_e1 - 5.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn zero_family_passes() {
        let g = euclidean(1);
        let mk = |t: f64| {
            let grid =
                Arc::new(SpaceTimeGrid::new(t, 5, SpatialGrid::cube(1, 1.0, 9), 0.1).unwrap());
            (t, GridField::zeros(grid))
        };
        let fam = vec![mk(1.0), mk(0.5), mk(0.25)];
        let e = EmbeddingExponents {
            k: 0,
            l: 0,
            q: 9.0,
            p: 9.0,
            q1: f64::INFINITY,
            p1: f64::INFINITY,
        };
        let rep = embedding_scaling_test(&g, &fam, &e, 0.15).unwrap();
        assert!(rep.verdict.passed());
    }

    #[test]
    fn rejects_bad_exponents() {
        let g = euclidean(1);
        let e = EmbeddingExponents {
            k: 0,
            l: 0,
            q: 9.0,
            p: 9.0,
            q1: 4.0, // q₁ < q violates the ordering
            p1: f64::INFINITY,
        };
        let grid = Arc::new(SpaceTimeGrid::new(1.0, 5, SpatialGrid::cube(1, 1.0, 9), 0.1).unwrap());
        let fam = vec![(1.0, GridField::zeros(grid.clone())), (0.5, GridField::zeros(grid))];
        assert!(embedding_scaling_test(&g, &fam, &e, 0.15).is_err());
    }

    #[test]
    fn rejects_nonzero_initial_data() {
        let g = euclidean(1);
        let grid = Arc::new(SpaceTimeGrid::new(1.0, 5, SpatialGrid::cube(1, 1.0, 9), 0.1).unwrap());
        let f = GridField::from_fn(grid, |_, _| 1.0);
        let e = EmbeddingExponents {
            k: 0,
            l: 0,
            q: 9.0,
            p: 9.0,
            q1: f64::INFINITY,
            p1: f64::INFINITY,
        };
        assert!(embedding_scaling_test(&g, &[(1.0, f.clone()), (0.5, f)], &e, 0.15).is_err());
    }
}

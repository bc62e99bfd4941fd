//! Built-in groups used throughout the test and experiment suites.

use super::CarnotGroupSpec;

/// Abelian group `(R^d, +)`: step 1, Q = d, additive noise case.
pub fn euclidean(d: usize) -> CarnotGroupSpec {
    CarnotGroupSpec::new(format!("euclidean{d}"), vec![1; d], &[])
        .expect("euclidean spec is valid")
}

/// First Heisenberg group H^1: N = 3, m = 2, [Z_1, Z_2] = Z_3, Q = 4.
pub fn heisenberg1() -> CarnotGroupSpec {
    CarnotGroupSpec::new("heisenberg1", vec![1, 1, 2], &[(0, 1, 2, 1.0)])
        .expect("heisenberg spec is valid")
}

/// Engel group: N = 4, m = 2, step 3, weights (1,1,2,3), Q = 7,
/// with [Z_1, Z_2] = Z_3 and [Z_1, Z_3] = Z_4.
pub fn engel() -> CarnotGroupSpec {
    CarnotGroupSpec::new(
        "engel",
        vec![1, 1, 2, 3],
        &[(0, 1, 2, 1.0), (0, 2, 3, 1.0)],
    )
    .expect("engel spec is valid")
}

/// Resolves a group by name; the names accepted in scenario configs.
pub fn by_name(name: &str) -> Option<CarnotGroupSpec> {
    match name {
        "euclidean1" => Some(euclidean(1)),
        "euclidean2" => Some(euclidean(2)),
        "euclidean3" => Some(euclidean(3)),
        "heisenberg1" => Some(heisenberg1()),
        "engel" => Some(engel()),
        _ => None,
    }
}

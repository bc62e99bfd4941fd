//! A numerical laboratory for hypoelliptic diffusions on homogeneous Carnot
//! groups: exact group algebra, the sub-Laplacian heat semigroup, mixed-norm
//! function spaces on space-time grids, a Kolmogorov solver with singular
//! drifts, Stratonovich SDE integration with exit times, and the Zvonkin
//! conjugation experiments built on top of all of it.

pub mod error;
pub mod fields;
pub mod group;
pub mod heat;
pub mod pde;
pub mod report;
pub mod rng;
pub mod sde;
pub mod stats;
pub mod zvonkin;

pub use error::{Error, Result};
pub use group::{CarnotGroupSpec, GroupPoint};

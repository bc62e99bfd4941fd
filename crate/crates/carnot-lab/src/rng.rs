//! Deterministic counter-based random streams: a master 64-bit seed plus a
//! stream id select independent ChaCha streams, so parallel runs are
//! reproducible independently of the thread count.

use rand::SeedableRng;
use rand_chacha::rand_core::RngCore;
use rand_chacha::ChaCha8Rng;

/// The RNG for (seed, stream). Distinct stream ids give independent streams
/// of the same keyed cipher.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard normal draw (Box-Muller-free: uses rand_distr's ziggurat).
pub fn fill_standard_normal(rng: &mut ChaCha8Rng, out: &mut [f64]) {
    use rand_distr::{Distribution, StandardNormal};
    for v in out.iter_mut() {
        *v = StandardNormal.sample(rng);
    }
}

/// Splits a stage label into a sub-stream space; keeps per-stage streams
/// disjoint when a master seed drives several stages.
pub fn stage_stream(stage: u64, item: u64) -> u64 {
    stage.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(item)
}

#[allow(unused)]
fn _assert_rngcore(r: &mut ChaCha8Rng) -> u32 {
    r.next_u32()
}

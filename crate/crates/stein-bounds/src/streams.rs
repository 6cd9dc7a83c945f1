//! Reproducible random number streams.
//!
//! Every replicate `i` of every Monte Carlo operation draws from a ChaCha
//! stream derived from `(seed, i)`, so serial and parallel runs, and runs
//! with different worker counts, produce bitwise-identical results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Streams with this bit set are reserved for pilot estimation, so pilot
/// draws never collide with the main replicate streams.
pub const PILOT_STREAM_BASE: u64 = 1 << 63;

/// The generator for replicate `stream` of a run keyed by `seed`.
pub fn replicate_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Combines a model seed with an operation seed into one stream key.
pub fn combine_seeds(model_seed: u64, op_seed: u64) -> u64 {
    model_seed ^ op_seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

//! Deterministic random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by the
//! user's seed, with the ChaCha stream id derived from a path of indices
//! (grid point, replicate, ...). Work items therefore see the same numbers no
//! matter how they are scheduled across threads.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a path of indices into a single stream id.
pub fn stream_id(path: &[u64]) -> u64 {
    path.iter()
        .fold(0x6A09_E667_F3BC_C908, |acc, &p| mix64(acc ^ mix64(p)))
}

/// Generator for the work item identified by `path` under `seed`.
pub fn stream_rng(seed: u64, path: &[u64]) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(path));
    rng
}

/// A derived seed, for handing a sub-task its own master seed.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    mix64(seed ^ stream_id(path))
}

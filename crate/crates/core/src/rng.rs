//! The single PRNG family used for every seeded draw in the crate:
//! xoshiro256** seeded through SplitMix64 from a 64-bit seed.

use rand::SeedableRng;
pub use rand_xoshiro::Xoshiro256StarStar as StudyRng;

pub fn seeded(seed: u64) -> StudyRng {
    StudyRng::seed_from_u64(seed)
}

/// Derives an independent stream from `seed` for a numbered purpose, so that
/// e.g. noise draws do not shift when disc placement draws change.
pub fn substream(seed: u64, stream: u64) -> StudyRng {
    let mixed = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15).rotate_left(17);
    StudyRng::seed_from_u64(mixed)
}

//! Seeded random streams.
//!
//! Every consumer gets its own ChaCha8 stream keyed by the instance seed, so
//! the draws for one purpose never shift when another purpose draws more.
//! Per-trial seeds are derived from a master seed with SplitMix64, which makes
//! trial `i` independent of how many trials are run in total.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purposes with a dedicated random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Positions = 1,
    Signatures = 2,
    Activity = 3,
    Channels = 4,
    Noise = 5,
    Permutations = 6,
}

/// ChaCha8 generator for `(seed, purpose)`.
pub fn substream(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of Monte-Carlo trial `trial` under `master`.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    splitmix64(splitmix64(master) ^ trial.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

//! Seed derivation. Every random stream is a ChaCha8 generator keyed by a
//! 64-bit seed and a 64-bit stream id, so independent runs never share state
//! and results do not depend on execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream ids reserved for environment construction.
pub mod streams {
    pub const ENV_GOLD: u64 = 1;
    pub const ENV_NOISE: u64 = 2;
    pub const ENV_ENSEMBLE: u64 = 3;
    pub const ENV_LOGITS: u64 = 4;
    pub const ENV_HACK: u64 = 5;
    pub const AGREEMENT: u64 = 6;
    pub const PILOT: u64 = 7;
    pub const TRAIN: u64 = 8;
    pub const VERIFY: u64 = 9;
}

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer, used to fold several integers into one seed.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the `index`-th replicate of a base seed.
pub fn derive(base: u64, index: u64) -> u64 {
    mix(base ^ mix(index.wrapping_add(1)))
}

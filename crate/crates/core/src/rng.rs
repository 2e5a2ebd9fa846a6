//! Seeded random streams.
//!
//! Every random quantity in the crate is drawn from a ChaCha stream selected
//! by `(master seed, stream tag)`. Work can therefore be split across threads
//! in any order and still reproduce bit-for-bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream-tag namespaces, so unrelated consumers never share a stream.
pub mod purpose {
    pub const SCENARIO: u64 = 1;
    pub const ORACLE: u64 = 2;
    pub const COVARIANCE_ORACLE: u64 = 3;
    pub const TEST: u64 = 99;
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derives an independent stream from a master seed and a list of tags.
pub fn substream(seed: u64, tags: &[u64]) -> SimRng {
    let stream = tags.iter().fold(0x5EED_u64, |acc, &t| splitmix64(acc ^ splitmix64(t)));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

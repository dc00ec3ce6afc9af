//! Counter-based random streams.
//!
//! Every replicate draws from its own ChaCha8 stream selected by
//! `(master seed, replicate index)`, so results do not depend on how
//! replicates are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Stream for replicate `index` under `seed`.
pub fn replicate_stream(seed: u64, index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Derives an independent master seed for a named purpose, so that two
/// consumers sharing a seed (say, the simulated side and the oracle side of
/// a two-sample test) never reuse the same streams.
pub fn derive_seed(seed: u64, purpose: &str) -> u64 {
    // FNV-1a over the label, folded with a splitmix64 finaliser.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in purpose.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

//! Named, seed-derived random streams.
//!
//! Every random decision in the crate is drawn from a ChaCha stream whose
//! seed is a pure function of the user seed, a stream name and an index, so
//! serial and parallel execution see the same numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive the seed of the sub-stream `name` from `seed`.
pub fn substream(seed: u64, name: &str) -> u64 {
    let h = name
        .bytes()
        .fold(FNV_OFFSET, |h, b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME));
    splitmix(seed ^ splitmix(h))
}

/// Generator for `name` at position `index` (tree number, sample number, ...).
pub fn stream(seed: u64, name: &str, index: u64) -> Rng {
    let mut rng = Rng::seed_from_u64(substream(seed, name));
    rng.set_stream(index);
    rng
}

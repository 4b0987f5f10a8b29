//! Named sub-seeds.
//!
//! Every random stream in the crate is derived from one root seed and a
//! stream name, so that e.g. the train/test split can be varied without
//! disturbing weight initialization.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const SYNTH: &str = "synth";
pub const SPLIT: &str = "split";
pub const INIT: &str = "init";
pub const SHUFFLE: &str = "shuffle";
pub const NNMF: &str = "nnmf";

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a stream seed from a root seed and a stream name.
pub fn sub_seed(root: u64, name: &str) -> u64 {
    // FNV-1a over the name, then mixed with the root.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    splitmix64(root ^ splitmix64(h))
}

/// Derive an indexed stream seed, e.g. one per mother or per segment.
pub fn indexed_seed(root: u64, name: &str, index: u64) -> u64 {
    splitmix64(sub_seed(root, name) ^ splitmix64(index.wrapping_add(1)))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

//! Seed derivation.
//!
//! Every random source in the crate is a ChaCha8 stream seeded from one
//! user-facing seed. Components derive their own seed as
//! `derive_seed(seed, purpose)`: the base seed is folded with the UTF-8 bytes
//! of `purpose` through the SplitMix64 finalizer. Grid cells use
//! `"grid/<row>/<col>"` purposes so that a cell's stream depends only on its
//! coordinates.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, purpose: &str) -> u64 {
    purpose
        .bytes()
        .fold(splitmix64(seed), |h, b| splitmix64(h ^ u64::from(b)))
}

pub fn rng_for(seed: u64, purpose: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, purpose))
}

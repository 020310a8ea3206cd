//! Counter-based seed splitting.
//!
//! Every random object in an experiment is drawn from a generator seeded by
//! `derive(parent, tag)`, so results depend only on the seed path and never on
//! execution order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for stream `tag` of `parent`.
pub fn derive(parent: u64, tag: u64) -> u64 {
    splitmix64(parent ^ splitmix64(tag.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

/// Child seed along a path of tags.
pub fn derive_path(parent: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(parent, |s, &t| derive(s, t))
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// Stream tags used across the crate.
pub(crate) const TAG_FILTER: u64 = 1;
pub(crate) const TAG_MASK: u64 = 2;
pub(crate) const TAG_SIGNAL: u64 = 3;
pub(crate) const TAG_SUPPORT: u64 = 4;

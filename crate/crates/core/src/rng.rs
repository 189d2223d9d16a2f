//! Seed plumbing.
//!
//! Every random draw in the crate is taken from a [`SmallRng`] seeded by a
//! 64-bit key. Keys are derived from a top-level seed through named
//! substreams (`module.operation` plus an index) and, inside lazily grown
//! trees, from the parent's key and the child's position. The draws made
//! while expanding a node are therefore a pure function of the seed and the
//! node's path from the root, independent of traversal order or threads.

use rand::rngs::SmallRng;
use rand::SeedableRng;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Combine a key with a child index.
#[inline]
pub fn child_key(parent: u64, index: u64) -> u64 {
    mix64(parent ^ mix64(index.wrapping_add(0x632b_e59b_d9b4_e019)))
}

fn fnv1a(name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Key of the `index`-th replicate of the named substream of `seed`.
pub fn substream(seed: u64, name: &str, index: u64) -> u64 {
    child_key(mix64(seed) ^ fnv1a(name), index)
}

pub fn rng_from_key(key: u64) -> SmallRng {
    SmallRng::seed_from_u64(key)
}

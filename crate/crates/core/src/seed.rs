//! Hash-derived random streams.
//!
//! Every stream is keyed by the master seed plus a path of labels, so the
//! draws a tree node or a replica sees do not depend on the order in which
//! work is scheduled.

use rand::SeedableRng;
use rand_xoshiro::{SplitMix64, Xoshiro256PlusPlus};

/// Per-node stream. Nodes draw only a handful of numbers, so the cheapest
/// seedable generator is the right one.
pub type NodeStream = SplitMix64;

/// Stream for long runs (walks, replicas).
pub type RandomStream = Xoshiro256PlusPlus;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Combines a key with one more label.
#[inline]
pub fn derive(key: u64, label: u64) -> u64 {
    mix64(key ^ mix64(label.wrapping_add(0x9e37_79b9_7f4a_7c15)))
}

/// Label constants separating the stream families that share a master seed.
pub mod label {
    pub const TREE: u64 = 0x7472_6565;
    pub const WALK: u64 = 0x7761_6c6b;
    pub const NODE: u64 = 0x6e6f_6465;
    pub const SAMPLE: u64 = 0x7361_6d70;
}

pub fn node_stream(tree_seed: u64, node_key: u64) -> NodeStream {
    NodeStream::seed_from_u64(derive(derive(tree_seed, label::NODE), node_key))
}

pub fn stream(seed: u64, family: u64, index: u64) -> RandomStream {
    RandomStream::seed_from_u64(derive(derive(seed, family), index))
}

/// Seed of the `index`-th independent object (tree, sample) of a family.
pub fn sub_seed(seed: u64, family: u64, index: u64) -> u64 {
    derive(derive(seed, family), index)
}

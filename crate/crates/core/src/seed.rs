//! Deterministic seed tree.
//!
//! Every random draw in the crate is keyed by a path from a master seed:
//! `derive(parent, label, index)` produces the child seed for stage `label`
//! and position `index`. The hash is FNV-1a over the little-endian parent,
//! the label length and bytes, and the index, finalized with SplitMix64, so
//! the tree is identical on every platform and toolchain. Work that runs in
//! parallel always takes its seed from the tree, never from a shared RNG, so
//! evaluation order cannot change any output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// The RNG used everywhere a seed is turned into randomness.
pub type Rng = ChaCha8Rng;

fn fnv(mut hash: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for stage `label`, position `index`.
pub fn derive(parent: u64, label: &str, index: u64) -> u64 {
    let mut h = fnv(FNV_OFFSET, &parent.to_le_bytes());
    h = fnv(h, &(label.len() as u64).to_le_bytes());
    h = fnv(h, label.as_bytes());
    h = fnv(h, &index.to_le_bytes());
    splitmix64(h)
}

/// Child seed keyed by arbitrary content (e.g. the text form of a distribution).
pub fn derive_content(parent: u64, label: &str, content: &[u8]) -> u64 {
    let mut h = fnv(FNV_OFFSET, &parent.to_le_bytes());
    h = fnv(h, &(label.len() as u64).to_le_bytes());
    h = fnv(h, label.as_bytes());
    h = fnv(h, &(content.len() as u64).to_le_bytes());
    h = fnv(h, content);
    splitmix64(h)
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

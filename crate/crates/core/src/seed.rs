//! Derivation of independent sub-seeds from the single run seed.
//!
//! A sub-seed is the first 8 bytes (little endian) of
//! `SHA-256(seed_le_bytes || label_utf8 || index_le_bytes)`. Every random
//! stream in the crate (bootstrap rows, per-tree feature selection) is a
//! `ChaCha8Rng` seeded from such a value, so one `u64` reproduces a run on
//! any platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub const DSI_STREAM: &str = "dsi";
pub const TREE_STREAM: &str = "tree";

pub fn derive(seed: u64, label: &str, index: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(label.as_bytes());
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    let mut word = [0u8; 8];
    word.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(word)
}

pub fn rng(seed: u64, label: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, label, index))
}

/// Hex SHA-256 of arbitrary bytes.
pub fn digest_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

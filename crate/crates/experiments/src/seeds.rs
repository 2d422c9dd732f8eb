//! Named random streams.
//!
//! Every stream is a ChaCha8 generator keyed by
//! `SHA-256(label || 0x00 || seed as little-endian u64)`. Streams with
//! different labels are independent, so adding an algorithm or a risk level
//! never shifts the draws of an existing one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::config::Algorithm;

pub fn seed_stream(label: &str, seed: u64) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(label.as_bytes());
    h.update([0u8]);
    h.update(seed.to_le_bytes());
    let mut key = [0u8; 32];
    key.copy_from_slice(&h.finalize());
    ChaCha8Rng::from_seed(key)
}

/// Environment transitions of episode `seed`. Shared by all algorithms and
/// risk levels, which gives common random numbers across the comparison.
pub fn environment_stream(seed: u64) -> ChaCha8Rng {
    seed_stream("env", seed)
}

pub fn planner_stream(algorithm: Algorithm, beta: f64, seed: u64) -> ChaCha8Rng {
    seed_stream(&format!("planner/{}/{:016x}", algorithm.name(), beta.to_bits()), seed)
}

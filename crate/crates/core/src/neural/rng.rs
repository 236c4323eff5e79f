//! Counter-based random streams. Each stream is a ChaCha8 generator keyed by
//! a hash of (seed, tag, indices), so any draw can be replayed without
//! carrying generator state around.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub fn stream(seed: u64, tag: &str, indices: &[u64]) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((tag.len() as u64).to_le_bytes());
    h.update(tag.as_bytes());
    for i in indices {
        h.update(i.to_le_bytes());
    }
    ChaCha8Rng::from_seed(h.finalize().into())
}

//! Seeded, splittable randomness.
//!
//! Every trial and every query draws from its own ChaCha stream whose key is
//! derived from `(seed, labels...)`, so runs replay identically regardless of
//! the order in which trials are executed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// The generator used throughout the crate.
pub type LllRng = ChaCha8Rng;

/// An independent stream for `(seed, labels)`.
pub fn substream(seed: u64, labels: &[u64]) -> LllRng {
    let mut hasher = Sha256::new();
    hasher.update(b"lll-lca/substream");
    hasher.update(seed.to_le_bytes());
    for l in labels {
        hasher.update(l.to_le_bytes());
    }
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

/// A stream for a single seed.
pub fn seeded(seed: u64) -> LllRng {
    substream(seed, &[])
}

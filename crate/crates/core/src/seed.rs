//! Stable seed derivation.
//!
//! Every random stream in the pipeline is keyed by the user seed plus a
//! label naming the consumer (a patent id, a draw index, ...). Streams never
//! depend on scheduling order, so results are identical for any thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derives a 64-bit seed from `(seed, domain, key, index)`.
///
/// The digest is SHA-256 over a length-prefixed encoding, so distinct inputs
/// cannot alias by concatenation.
pub fn derive(seed: u64, domain: &str, key: &str, index: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update((domain.len() as u64).to_le_bytes());
    hasher.update(domain.as_bytes());
    hasher.update((key.len() as u64).to_le_bytes());
    hasher.update(key.as_bytes());
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(head)
}

/// A ChaCha8 generator for the derived stream.
pub fn rng(seed: u64, domain: &str, key: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, domain, key, index))
}

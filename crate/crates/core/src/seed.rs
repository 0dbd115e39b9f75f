//! Derivation of independent random streams from a single scenario seed.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

/// Hashes `(label, seed, path)` into a 32-byte stream key. Distinct labels
/// or paths give unrelated streams.
pub fn derive(seed: u64, label: &str, path: &[u64]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update((label.len() as u64).to_be_bytes());
    h.update(label.as_bytes());
    h.update(seed.to_be_bytes());
    for p in path {
        h.update(p.to_be_bytes());
    }
    h.finalize().into()
}

pub fn rng(seed: u64, label: &str, path: &[u64]) -> ChaCha20Rng {
    ChaCha20Rng::from_seed(derive(seed, label, path))
}

/// A 64-bit child seed.
pub fn child(seed: u64, label: &str, path: &[u64]) -> u64 {
    let d = derive(seed, label, path);
    u64::from_be_bytes(d[..8].try_into().expect("8 bytes"))
}

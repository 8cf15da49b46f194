//! Seed derivation for reproducible, order-independent random streams.
//!
//! A stream seed is the first eight bytes, read little-endian, of
//!
//! ```text
//! SHA-256( "ua-seed-v1" || master (u64 LE) || len(label) (u64 LE) || label (UTF-8) || index (u64 LE) )
//! ```
//!
//! The length prefix keeps `(label, index)` pairs from aliasing each other.
//! Streams are then driven by `ChaCha8Rng::seed_from_u64(stream_seed)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

const DOMAIN: &[u8] = b"ua-seed-v1";

pub fn derive_seed(master: u64, label: &str, index: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(DOMAIN);
    hasher.update(master.to_le_bytes());
    hasher.update((label.len() as u64).to_le_bytes());
    hasher.update(label.as_bytes());
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(head)
}

pub fn stream(master: u64, label: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, label, index))
}

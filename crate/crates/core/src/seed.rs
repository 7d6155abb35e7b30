//! Root-seed splitting.
//!
//! Every randomized stage derives its own stream from one root seed:
//! the stage seed is the first 8 bytes (little-endian) of
//! `SHA-256(root_seed as u64 LE || stage label as UTF-8)`. Replaying an
//! experiment therefore only needs the root integer.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub const STAGE_INIT: &str = "init";
pub const STAGE_SHUFFLE: &str = "shuffle";
pub const STAGE_DROPOUT: &str = "dropout";

pub fn derive_seed(root: u64, stage: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(root.to_le_bytes());
    hasher.update(stage.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn stage_rng(root: u64, stage: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, stage))
}

/// Hex SHA-256 of arbitrary bytes; used for fingerprints and provenance.
pub fn fingerprint(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

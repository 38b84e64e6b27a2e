//! Deterministic random streams.
//!
//! Every randomized stage draws from a ChaCha8 stream whose 64-bit seed is
//! derived from a master seed and a stage label, so one stage can be replayed
//! without re-running the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StageRng = ChaCha8Rng;

/// Derive an independent seed for a named stage from a master seed.
pub fn derive_seed(master: u64, stage: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update(stage.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Seed for the sampling stream of boosting round `tree_index`.
pub fn tree_seed(master: u64, tree_index: usize) -> u64 {
    derive_seed(master, &format!("tree/{tree_index}"))
}

pub fn stream(seed: u64) -> StageRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stage_stream(master: u64, stage: &str) -> StageRng {
    stream(derive_seed(master, stage))
}

use sha2::{Digest, Sha256};

/// Stable per-task seed: first 8 bytes (little endian) of
/// `SHA-256(master_seed_le || command || index_le)`.
pub fn task_seed(master: u64, command: &str, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(command.as_bytes());
    h.update(index.to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

//! State digests and the seeded hash family used to place them in filters.

use sha2::{Digest as _, Sha256};

use crate::vbf::Vbf;

/// 32-byte SHA-256 digest of a state's canonical bytes.
pub type Digest = [u8; 32];

/// Hashes arbitrary bytes into a [`Digest`].
pub fn digest(bytes: &[u8]) -> Digest {
    Sha256::digest(bytes).into()
}

/// Index space and hash family shared by every filter of a clock.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HashConfig {
    /// Number of counters per filter.
    pub n: u32,
    /// Number of hash functions.
    pub m: u32,
    pub seed: u64,
}

impl HashConfig {
    pub const fn new(n: u32, m: u32, seed: u64) -> Self {
        Self { n, m, seed }
    }

    pub fn is_valid(&self) -> bool {
        self.n >= 1 && self.m >= 1
    }
}

impl Default for HashConfig {
    fn default() -> Self {
        Self::new(256, 4, 0)
    }
}

/// Returns the `m` indices of `digest`, one per hash function. Duplicates are
/// allowed.
pub fn hash_indices(digest: &Digest, cfg: &HashConfig) -> alloc::vec::Vec<u32> {
    (0..cfg.m).map(|k| index_of(digest, cfg, k)).collect()
}

fn index_of(digest: &Digest, cfg: &HashConfig, function: u32) -> u32 {
    let mut h = Sha256::new();
    h.update(b"dobc-hash");
    h.update(cfg.seed.to_le_bytes());
    h.update(function.to_le_bytes());
    h.update(digest);
    let out = h.finalize();
    let mut word = [0u8; 8];
    word.copy_from_slice(&out[..8]);
    (u64::from_le_bytes(word) % u64::from(cfg.n)) as u32
}

/// Width-1 filter with a 1 at every hashed index of `digest`.
pub fn unit_filter(digest: &Digest, cfg: &HashConfig) -> Vbf {
    Vbf::unit_from_indices(cfg.n as usize, &hash_indices(digest, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indices_are_deterministic() {
        let d = digest(b"state");
        let cfg = HashConfig::new(8, 2, 7);
        let a = hash_indices(&d, &cfg);
        assert_eq!(a.len(), 2);
        assert_eq!(a, hash_indices(&d, &cfg));
        assert!(a.iter().all(|&i| i < 8));
    }

    #[test]
    fn single_bucket() {
        let d = digest(b"anything");
        for seed in [0, 1, 99] {
            assert_eq!(hash_indices(&d, &HashConfig::new(1, 3, seed)), [0, 0, 0]);
        }
    }

    #[test]
    fn seed_changes_family() {
        let d = digest(b"x");
        let a = hash_indices(&d, &HashConfig::new(1 << 20, 4, 1));
        let b = hash_indices(&d, &HashConfig::new(1 << 20, 4, 2));
        assert_ne!(a, b);
    }

    #[test]
    fn unit_filter_popcount_bounded_by_m() {
        let cfg = HashConfig::new(16, 5, 3);
        for i in 0u32..200 {
            let f = unit_filter(&digest(&i.to_le_bytes()), &cfg);
            let ones = f.counters().iter().filter(|&&c| c != 0).count();
            assert!(ones >= 1 && ones <= 5);
            assert!(f.counters().iter().all(|&c| c <= 1));
        }
    }
}

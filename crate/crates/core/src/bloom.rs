//! The plain counting Bloom clock baseline.

use alloc::vec;
use alloc::vec::Vec;

use crate::hash::{hash_indices, Digest, HashConfig};
use crate::{CausalVerdict, Error};

/// Counting Bloom clock: one vector of counters plus the tick depth.
///
/// Counters are 32 bits wide and never saturate in practice.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BloomClock {
    hash: HashConfig,
    counters: Vec<u32>,
    depth: u64,
}

impl BloomClock {
    pub fn new(hash: HashConfig) -> Self {
        Self { hash, counters: vec![0; hash.n as usize], depth: 0 }
    }

    pub fn hash_config(&self) -> &HashConfig {
        &self.hash
    }

    pub fn counters(&self) -> &[u32] {
        &self.counters
    }

    pub fn depth(&self) -> u64 {
        self.depth
    }

    /// Increments each hashed index once per hash function and bumps the depth.
    pub fn tick(&self, digest: &Digest) -> Self {
        let mut next = self.clone();
        for i in hash_indices(digest, &self.hash) {
            next.counters[i as usize] += 1;
        }
        next.depth += 1;
        next
    }

    /// Per-index maximum of two clocks; depth is the larger of the two.
    pub fn merge(&self, other: &Self) -> Result<Self, Error> {
        if self.hash != other.hash {
            return Err(Error::ConfigMismatch);
        }
        let counters = self
            .counters
            .iter()
            .zip(&other.counters)
            .map(|(a, b)| *a.max(b))
            .collect();
        Ok(Self { hash: self.hash, counters, depth: self.depth.max(other.depth) })
    }

    /// Relation of `self` (x) to `other` (y).
    pub fn compare(&self, other: &Self) -> Result<CausalVerdict, Error> {
        if self.hash != other.hash {
            return Err(Error::ConfigMismatch);
        }
        let (x, y) = (self, other);
        if x.counters == y.counters && x.depth == y.depth {
            return Ok(CausalVerdict::AfterOrEqual);
        }
        let x_dom = dominates(&x.counters, &y.counters);
        let y_dom = dominates(&y.counters, &x.counters);
        // dominance plus a difference means at least one counter is strictly larger
        let strict = x.counters != y.counters;
        Ok(if x_dom && strict && x.depth > y.depth {
            CausalVerdict::StrictlyAfter
        } else if y_dom && strict && y.depth > x.depth {
            CausalVerdict::StrictlyBefore
        } else if y_dom && y.depth >= x.depth {
            CausalVerdict::BeforeOrEqual
        } else if x_dom && x.depth >= y.depth {
            CausalVerdict::AfterOrEqual
        } else {
            CausalVerdict::Concurrent
        })
    }
}

fn dominates(a: &[u32], b: &[u32]) -> bool {
    a.iter().zip(b).all(|(x, y)| x >= y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hash::digest;

    fn cfg() -> HashConfig {
        HashConfig::new(64, 2, 11)
    }

    #[test]
    fn tick_increments_each_occurrence() {
        let d = digest(b"a");
        let c = BloomClock::new(cfg()).tick(&d);
        assert_eq!(c.depth(), 1);
        assert_eq!(c.counters().iter().sum::<u32>(), 2);
        for i in hash_indices(&d, &cfg()) {
            assert!(c.counters()[i as usize] >= 1);
        }
        assert_eq!(c, BloomClock::new(cfg()).tick(&d));
    }

    #[test]
    fn counter_sum_is_ticks_times_m() {
        let mut c = BloomClock::new(cfg());
        for t in 0u32..50 {
            c = c.tick(&digest(&t.to_le_bytes()));
        }
        assert_eq!(c.counters().iter().sum::<u32>(), 50 * 2);
    }

    #[test]
    fn child_and_equal() {
        let x = BloomClock::new(cfg()).tick(&digest(b"x"));
        let y = x.tick(&digest(b"y"));
        assert_eq!(x.compare(&y).unwrap(), CausalVerdict::StrictlyBefore);
        assert_eq!(y.compare(&x).unwrap(), CausalVerdict::StrictlyAfter);
        assert_eq!(x.compare(&x).unwrap(), CausalVerdict::AfterOrEqual);
    }

    #[test]
    fn disjoint_siblings_are_concurrent() {
        let cfg = cfg();
        let base = digest(b"p");
        let first = digest(&0u32.to_le_bytes());
        let fi = hash_indices(&first, &cfg);
        // search for a digest whose index set is disjoint from the first
        let second = (1u32..)
            .map(|i| digest(&i.to_le_bytes()))
            .find(|d| hash_indices(d, &cfg).iter().all(|i| !fi.contains(i)))
            .unwrap();
        let root = BloomClock::new(cfg).tick(&base);
        let a = root.tick(&first);
        let b = root.tick(&second);
        assert_eq!(a.compare(&b).unwrap(), CausalVerdict::Concurrent);
    }

    #[test]
    fn config_mismatch() {
        let a = BloomClock::new(cfg());
        let b = BloomClock::new(HashConfig::new(64, 3, 11));
        assert_eq!(a.compare(&b), Err(Error::ConfigMismatch));
    }
}

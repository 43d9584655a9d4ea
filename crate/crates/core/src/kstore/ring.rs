use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use sha2::{Digest as _, Sha256};

use crate::Error;

/// Consistent-hash ring of physical nodes, each placed at several virtual
/// positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ring {
    positions: BTreeMap<u64, u32>,
    nodes: BTreeSet<u32>,
    vnodes: u32,
}

fn position(bytes: &[&[u8]]) -> u64 {
    let mut h = Sha256::new();
    for b in bytes {
        h.update(b);
    }
    let d = h.finalize();
    u64::from_be_bytes(d[..8].try_into().expect("32-byte digest"))
}

/// Ring position of a key.
pub fn key_position(key: &[u8]) -> u64 {
    position(&[b"key", key])
}

impl Ring {
    pub fn new(nodes: u32, vnodes: u32) -> Result<Self, Error> {
        if nodes == 0 || vnodes == 0 {
            return Err(Error::InvalidConfig("ring needs at least one node and one virtual node"));
        }
        let mut ring = Self { positions: BTreeMap::new(), nodes: BTreeSet::new(), vnodes };
        for n in 0..nodes {
            ring.add_node(n);
        }
        Ok(ring)
    }

    pub fn add_node(&mut self, node: u32) {
        if !self.nodes.insert(node) {
            return;
        }
        for v in 0..self.vnodes {
            let p = position(&[b"vnode", &node.to_le_bytes(), &v.to_le_bytes()]);
            // a 64-bit collision would need ~2^32 vnodes; first owner wins
            self.positions.entry(p).or_insert(node);
        }
    }

    pub fn remove_node(&mut self, node: u32) {
        if self.nodes.remove(&node) {
            self.positions.retain(|_, n| *n != node);
        }
    }

    pub fn nodes(&self) -> &BTreeSet<u32> {
        &self.nodes
    }

    /// The `r` distinct physical nodes met walking clockwise from the key's
    /// position.
    pub fn replica_group(&self, key: &[u8], r: usize) -> Result<Vec<u32>, Error> {
        if r > self.nodes.len() {
            return Err(Error::GroupTooLarge { requested: r, available: self.nodes.len() });
        }
        let start = key_position(key);
        let mut out = Vec::with_capacity(r);
        for (_, &n) in self.positions.range(start..).chain(self.positions.range(..start)) {
            if out.len() == r {
                break;
            }
            if !out.contains(&n) {
                out.push(n);
            }
        }
        Ok(out)
    }
}

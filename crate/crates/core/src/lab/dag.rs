use alloc::vec;
use alloc::vec::Vec;

use crate::hash::Digest;
use crate::{CausalVerdict, Error};

pub type ObjectId = u64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DagNode {
    pub digest: Digest,
    /// 1 for created objects, otherwise one more than the deepest parent.
    pub depth: u64,
    pub creator: u32,
    pub parents: Vec<ObjectId>,
}

/// Ground-truth record of which object was derived from which.
///
/// Ids are dense and handed out in insertion order, so parents always have
/// smaller ids than their children and the graph is acyclic by construction.
/// Each node keeps a bitset of its strict ancestors.
#[derive(Clone, Debug, Default)]
pub struct DerivationDag {
    nodes: Vec<DagNode>,
    ancestors: Vec<Vec<u64>>,
}

impl DerivationDag {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: ObjectId) -> Result<&DagNode, Error> {
        self.nodes.get(id as usize).ok_or(Error::UnknownObject(id))
    }

    pub fn nodes(&self) -> &[DagNode] {
        &self.nodes
    }

    pub fn add_root(&mut self, digest: Digest, creator: u32) -> ObjectId {
        let id = self.nodes.len() as ObjectId;
        self.nodes.push(DagNode { digest, depth: 1, creator, parents: Vec::new() });
        self.ancestors.push(vec![0; words(id as usize + 1)]);
        id
    }

    pub fn add_child(
        &mut self,
        parents: &[ObjectId],
        digest: Digest,
        creator: u32,
    ) -> Result<ObjectId, Error> {
        let id = self.nodes.len() as ObjectId;
        let mut bits = vec![0u64; words(id as usize + 1)];
        let mut depth = 0;
        for &p in parents {
            depth = depth.max(self.node(p)?.depth);
            for (w, a) in bits.iter_mut().zip(&self.ancestors[p as usize]) {
                *w |= a;
            }
            bits[p as usize / 64] |= 1 << (p % 64);
        }
        self.nodes.push(DagNode { digest, depth: depth + 1, creator, parents: parents.to_vec() });
        self.ancestors.push(bits);
        Ok(id)
    }

    /// True iff `b` was derived, directly or transitively, from `a`.
    pub fn reaches(&self, a: ObjectId, b: ObjectId) -> Result<bool, Error> {
        self.node(a)?;
        self.node(b)?;
        let bits = &self.ancestors[b as usize];
        Ok(bits.get(a as usize / 64).is_some_and(|w| w >> (a % 64) & 1 == 1))
    }

    /// Relation of `x` to `y` according to the derivation history.
    pub fn verdict(&self, x: ObjectId, y: ObjectId) -> Result<CausalVerdict, Error> {
        Ok(if x == y {
            self.node(x)?;
            CausalVerdict::AfterOrEqual
        } else if self.reaches(y, x)? {
            CausalVerdict::StrictlyAfter
        } else if self.reaches(x, y)? {
            CausalVerdict::StrictlyBefore
        } else {
            CausalVerdict::Concurrent
        })
    }
}

fn words(bits: usize) -> usize {
    bits.div_ceil(64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn d(i: u8) -> Digest {
        [i; 32]
    }

    #[test]
    fn edges_and_roots() {
        let mut g = DerivationDag::new();
        let a = g.add_root(d(1), 0);
        let b = g.add_root(d(2), 1);
        let c = g.add_child(&[a], d(3), 0).unwrap();
        assert!(g.reaches(a, c).unwrap());
        assert!(!g.reaches(c, a).unwrap());
        assert!(!g.reaches(a, b).unwrap() && !g.reaches(b, a).unwrap());
        assert!(!g.reaches(a, a).unwrap());
        assert_eq!(g.verdict(c, a).unwrap(), CausalVerdict::StrictlyAfter);
        assert_eq!(g.verdict(a, b).unwrap(), CausalVerdict::Concurrent);
        assert_eq!(g.reaches(a, 99), Err(Error::UnknownObject(99)));
        assert_eq!(g.add_child(&[7], d(4), 0), Err(Error::UnknownObject(7)));
    }

    #[test]
    fn depth_is_one_more_than_deepest_parent() {
        let mut g = DerivationDag::new();
        let a = g.add_root(d(1), 0);
        let mut x = a;
        for i in 0..4 {
            x = g.add_child(&[x], d(10 + i), 0).unwrap();
        }
        let b = g.add_root(d(2), 1);
        let m = g.add_child(&[b, x], d(3), 1).unwrap();
        assert_eq!(g.node(x).unwrap().depth, 5);
        assert_eq!(g.node(m).unwrap().depth, 6);
    }

    #[test]
    fn matches_floyd_warshall_closure() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut g = DerivationDag::new();
        let n = 200;
        let mut adj = vec![vec![false; n]; n];
        for i in 0..n {
            if i == 0 || rng.gen_bool(0.1) {
                g.add_root(d(i as u8), 0);
                continue;
            }
            let k = rng.gen_range(1..=2.min(i));
            let mut ps: Vec<u64> = (0..k).map(|_| rng.gen_range(0..i) as u64).collect();
            ps.dedup();
            for &p in &ps {
                adj[p as usize][i] = true;
            }
            g.add_child(&ps, d(i as u8), 0).unwrap();
        }
        for k in 0..n {
            for i in 0..n {
                if adj[i][k] {
                    for j in 0..n {
                        if adj[k][j] {
                            adj[i][j] = true;
                        }
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                assert_eq!(g.reaches(i as u64, j as u64).unwrap(), adj[i][j], "{i}->{j}");
            }
        }
        // strict partial order
        for i in 0..n {
            assert!(!adj[i][i]);
            for j in 0..n {
                assert!(!(adj[i][j] && adj[j][i]));
            }
        }
    }
}

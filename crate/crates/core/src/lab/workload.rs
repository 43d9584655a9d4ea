use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::baseline::{VcEvent, VectorClock};
use super::dag::{DerivationDag, ObjectId};
use crate::hash::{digest, Digest};
use crate::{BloomClock, Dobc, DobcConfig, Error};

/// Forks pick a parent among this many most recent objects.
const FORK_WINDOW: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WorkloadSpec {
    pub nodes: u32,
    pub events: u32,
    pub merge_prob: f64,
    pub fork_prob: f64,
    pub create_prob: f64,
    pub seed: u64,
}

impl WorkloadSpec {
    pub fn new(nodes: u32, events: u32, seed: u64) -> Self {
        Self { nodes, events, merge_prob: 0.1, fork_prob: 0.2, create_prob: 0.02, seed }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let p = |x: f64| (0.0..=1.0).contains(&x);
        if self.nodes == 0 {
            return Err(Error::InvalidConfig("workload needs at least one node"));
        }
        if !(p(self.merge_prob) && p(self.fork_prob) && p(self.create_prob)) {
            return Err(Error::InvalidConfig("workload probabilities must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// A random derivation history with every clock kind attached to each object.
#[derive(Clone, Debug)]
pub struct Workload {
    pub spec: WorkloadSpec,
    pub dag: DerivationDag,
    pub dobc: Vec<Dobc>,
    pub bloom: Vec<BloomClock>,
    /// Object-granularity vector clocks: each mutate is a local event on the
    /// mutating node after it has received the parents' clocks.
    pub vector: Vec<VectorClock>,
}

/// One object per event.
///
/// Each event picks a node uniformly. It creates a fresh object with
/// probability `create_prob`; otherwise it merges two current tips with
/// probability `merge_prob`, forks from a recent object with probability
/// `fork_prob`, and extends a random tip otherwise. With `merge_prob` and
/// `fork_prob` both zero the history is a forest of chains. The history
/// depends only on the spec, never on the clock configuration.
pub fn generate_workload(spec: &WorkloadSpec, config: &DobcConfig) -> Result<Workload, Error> {
    spec.validate()?;
    let empty = Dobc::new(config.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut w = Workload {
        spec: *spec,
        dag: DerivationDag::new(),
        dobc: Vec::with_capacity(spec.events as usize),
        bloom: Vec::with_capacity(spec.events as usize),
        vector: Vec::with_capacity(spec.events as usize),
    };
    let mut node_vc = alloc::vec![VectorClock::new(spec.nodes as usize); spec.nodes as usize];
    let mut tips: Vec<ObjectId> = Vec::new();

    for e in 0..spec.events {
        let node = rng.gen_range(0..spec.nodes);
        let d = state_digest(spec.seed, e);
        let n = w.dag.len();
        let parents: Vec<ObjectId> = if n == 0 || rng.gen_bool(spec.create_prob) {
            Vec::new()
        } else if tips.len() >= 2 && rng.gen_bool(spec.merge_prob) {
            let i = rng.gen_range(0..tips.len());
            let mut j = rng.gen_range(0..tips.len() - 1);
            if j >= i {
                j += 1;
            }
            alloc::vec![tips[i], tips[j]]
        } else if rng.gen_bool(spec.fork_prob) {
            let lo = n.saturating_sub(FORK_WINDOW);
            alloc::vec![rng.gen_range(lo..n) as ObjectId]
        } else {
            alloc::vec![tips[rng.gen_range(0..tips.len())]]
        };

        let vc = &mut node_vc[node as usize];
        for &p in &parents {
            *vc = vc.step(node as usize, VcEvent::Recv(&w.vector[p as usize]))?;
        }
        *vc = vc.step(node as usize, VcEvent::Local)?;

        let (clock, bloom) = match parents[..] {
            [] => (empty.tick(&d), BloomClock::new(config.hash).tick(&d)),
            [p] => (w.dobc[p as usize].tick(&d), w.bloom[p as usize].tick(&d)),
            [p, q] => {
                let (p, q) = (p as usize, q as usize);
                (w.dobc[p].merge(&w.dobc[q])?.tick(&d), w.bloom[p].merge(&w.bloom[q])?.tick(&d))
            }
            _ => unreachable!(),
        };
        let id = if parents.is_empty() {
            w.dag.add_root(d, node)
        } else {
            w.dag.add_child(&parents, d, node)?
        };
        tips.retain(|t| !parents.contains(t));
        tips.push(id);
        w.dobc.push(clock);
        w.bloom.push(bloom);
        w.vector.push(vc.clone());
    }
    Ok(w)
}

fn state_digest(seed: u64, event: u32) -> Digest {
    let mut b = [0u8; 12];
    b[..8].copy_from_slice(&seed.to_le_bytes());
    b[8..].copy_from_slice(&event.to_le_bytes());
    digest(&b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::HashConfig;

    fn cfg() -> DobcConfig {
        DobcConfig::default_shape(HashConfig::default())
    }

    #[test]
    fn deterministic_per_seed() {
        let s = WorkloadSpec::new(4, 300, 11);
        let a = generate_workload(&s, &cfg()).unwrap();
        let b = generate_workload(&s, &cfg()).unwrap();
        assert_eq!(a.dag.nodes(), b.dag.nodes());
        assert_eq!(a.dobc, b.dobc);
        assert_eq!(a.vector, b.vector);
        let c = generate_workload(&WorkloadSpec { seed: 12, ..s }, &cfg()).unwrap();
        assert_ne!(a.dag.nodes(), c.dag.nodes());
    }

    #[test]
    fn history_independent_of_clock_shape() {
        let s = WorkloadSpec::new(3, 200, 5);
        let a = generate_workload(&s, &cfg()).unwrap();
        let wide = DobcConfig::default_shape(HashConfig::new(1024, 4, 0));
        let b = generate_workload(&s, &wide).unwrap();
        assert_eq!(a.dag.nodes(), b.dag.nodes());
    }

    #[test]
    fn no_merges_or_forks_gives_chains() {
        let s = WorkloadSpec { merge_prob: 0.0, fork_prob: 0.0, ..WorkloadSpec::new(3, 400, 2) };
        let w = generate_workload(&s, &cfg()).unwrap();
        let mut children = alloc::vec![0u32; w.dag.len()];
        for n in w.dag.nodes() {
            assert!(n.parents.len() <= 1);
            for &p in &n.parents {
                children[p as usize] += 1;
            }
        }
        assert!(children.iter().all(|&c| c <= 1));
    }

    #[test]
    fn depths_agree_with_clocks() {
        let w = generate_workload(&WorkloadSpec::new(4, 300, 3), &cfg()).unwrap();
        for (i, n) in w.dag.nodes().iter().enumerate() {
            assert_eq!(w.dobc[i].max_depth(), n.depth);
            assert!(w.bloom[i].depth() >= 1);
        }
    }

    #[test]
    fn rejects_bad_probabilities() {
        let s = WorkloadSpec { merge_prob: 1.5, ..WorkloadSpec::new(3, 10, 1) };
        assert!(generate_workload(&s, &cfg()).is_err());
    }
}

//! Objects derived from genesis states by registered pure functions.

use alloc::vec::Vec;

use crate::codec::{Reader, Writer};
use crate::hash::{digest, Digest};
use crate::lab::{DerivationDag, ObjectId};
use crate::{Dobc, DobcConfig, Error};

/// A mutation: parent states and an argument in, the child state out.
/// Must be deterministic and should read every parent.
pub type MutationFn = fn(parents: &[&[u8]], arg: &[u8]) -> Vec<u8>;

pub const MAX_ARITY: usize = 2;

#[derive(Clone, Copy, Debug)]
pub struct Mutation {
    pub name: &'static str,
    pub arity: usize,
    pub f: MutationFn,
}

/// Ordered family of mutations; a function's id is its registration index.
#[derive(Clone, Debug, Default)]
pub struct MutationRegistry {
    fns: Vec<Mutation>,
}

impl MutationRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, name: &'static str, arity: usize, f: MutationFn) -> Result<u32, Error> {
        if !(1..=MAX_ARITY).contains(&arity) {
            return Err(Error::InvalidConfig("mutation arity must be 1 or 2"));
        }
        if self.fns.iter().any(|m| m.name == name) {
            return Err(Error::InvalidConfig("mutation name registered twice"));
        }
        self.fns.push(Mutation { name, arity, f });
        Ok(self.fns.len() as u32 - 1)
    }

    pub fn get(&self, fn_id: u32) -> Result<&Mutation, Error> {
        self.fns.get(fn_id as usize).ok_or(Error::UnknownFunction(fn_id))
    }

    pub fn id_of(&self, name: &str) -> Option<u32> {
        self.fns.iter().position(|m| m.name == name).map(|i| i as u32)
    }

    pub fn len(&self) -> usize {
        self.fns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fns.is_empty()
    }

    pub fn apply(&self, fn_id: u32, parents: &[&[u8]], arg: &[u8]) -> Result<Vec<u8>, Error> {
        let m = self.get(fn_id)?;
        if parents.len() != m.arity {
            return Err(Error::Arity { fn_id, expected: m.arity, got: parents.len() });
        }
        Ok((m.f)(parents, arg))
    }
}

/// A state together with the clock of its derivation history.
///
/// `lineage` is the handle of the object in a [`DerivationDag`] when one is
/// being recorded; it is not part of the object's identity.
#[derive(Clone, Debug)]
pub struct Obj {
    state: Vec<u8>,
    digest: Digest,
    clock: Dobc,
    lineage: Option<ObjectId>,
}

impl PartialEq for Obj {
    fn eq(&self, other: &Self) -> bool {
        self.digest == other.digest && self.state == other.state && self.clock == other.clock
    }
}

impl Eq for Obj {}

impl Obj {
    /// A genesis object: a fresh clock ticked once with its own state.
    pub fn create(state: Vec<u8>, config: &DobcConfig) -> Result<Self, Error> {
        let empty = Dobc::new(config.clone())?;
        Ok(Self::create_from(state, &empty))
    }

    /// Like [`Obj::create`], reusing the configuration of `clock`.
    pub fn create_like(state: Vec<u8>, clock: &Dobc) -> Self {
        Self::create_from(state, &clock.emptied())
    }

    fn create_from(state: Vec<u8>, empty: &Dobc) -> Self {
        let digest = digest(&state);
        let clock = empty.tick(&digest);
        Self { state, digest, clock, lineage: None }
    }

    /// Applies `fn_id` to one or two parents. Two parents have their clocks
    /// merged with the configured strategy before the child's tick.
    pub fn mutate(
        registry: &MutationRegistry,
        fn_id: u32,
        parents: &[&Obj],
        arg: &[u8],
    ) -> Result<Self, Error> {
        let states: Vec<&[u8]> = parents.iter().map(|p| p.state.as_slice()).collect();
        let state = registry.apply(fn_id, &states, arg)?;
        let digest = digest(&state);
        let clock = match parents {
            [p] => p.clock.tick(&digest),
            [p, q] => p.clock.merge(&q.clock)?.tick(&digest),
            _ => unreachable!("arity checked by the registry"),
        };
        Ok(Self { state, digest, clock, lineage: None })
    }

    pub fn state(&self) -> &[u8] {
        &self.state
    }

    pub fn digest(&self) -> &Digest {
        &self.digest
    }

    pub fn clock(&self) -> &Dobc {
        &self.clock
    }

    pub fn lineage(&self) -> Option<ObjectId> {
        self.lineage
    }

    /// State bytes then the canonical clock encoding (which carries the
    /// depth set).
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.bytes(&self.state);
        w.raw(&self.clock.encode());
        w.buf
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, Error> {
        let mut r = Reader::new(bytes);
        let state = r.bytes()?.to_vec();
        let clock = Dobc::decode(r.rest())?;
        Ok(Self { digest: digest(&state), state, clock, lineage: None })
    }

    /// Swaps in another clock without re-deriving anything. The result is a
    /// forgery: no honest proof matches it. Used to model tampering peers.
    pub fn with_clock(mut self, clock: Dobc) -> Self {
        self.clock = clock;
        self
    }
}

/// Creates and mutates objects while recording every derivation edge.
#[derive(Clone, Debug, Default)]
pub struct Recorder {
    pub dag: DerivationDag,
}

impl Recorder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn create(&mut self, state: Vec<u8>, config: &DobcConfig, creator: u32) -> Result<Obj, Error> {
        let mut o = Obj::create(state, config)?;
        o.lineage = Some(self.dag.add_root(o.digest, creator));
        Ok(o)
    }

    pub fn mutate(
        &mut self,
        registry: &MutationRegistry,
        fn_id: u32,
        parents: &[&Obj],
        arg: &[u8],
        creator: u32,
    ) -> Result<Obj, Error> {
        let ids = parents
            .iter()
            .map(|p| p.lineage.ok_or(Error::UnknownObject(u64::MAX)))
            .collect::<Result<Vec<_>, _>>()?;
        let mut o = Obj::mutate(registry, fn_id, parents, arg)?;
        o.lineage = Some(self.dag.add_child(&ids, o.digest, creator)?);
        Ok(o)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hash::{hash_indices, unit_filter};
    use crate::{CausalVerdict, HashConfig};

    fn append(p: &[&[u8]], arg: &[u8]) -> Vec<u8> {
        let mut v = p[0].to_vec();
        v.extend_from_slice(arg);
        v
    }

    fn concat(p: &[&[u8]], _: &[u8]) -> Vec<u8> {
        [p[0], b"|", p[1]].concat()
    }

    fn registry() -> MutationRegistry {
        let mut r = MutationRegistry::new();
        r.register("append", 1, append).unwrap();
        r.register("concat", 2, concat).unwrap();
        r
    }

    fn cfg() -> DobcConfig {
        DobcConfig::default_shape(HashConfig::new(128, 3, 4))
    }

    #[test]
    fn registry_rules() {
        let mut r = registry();
        assert_eq!(r.id_of("concat"), Some(1));
        assert!(r.register("append", 1, append).is_err());
        assert!(r.register("triple", 3, append).is_err());
        assert_eq!(r.apply(9, &[b"x"], b""), Err(Error::UnknownFunction(9)));
        assert_eq!(r.apply(1, &[b"x"], b""), Err(Error::Arity { fn_id: 1, expected: 2, got: 1 }));
    }

    #[test]
    fn create_ticks_own_digest() {
        let o = Obj::create(b"genesis".to_vec(), &cfg()).unwrap();
        assert_eq!(o.digest(), &digest(b"genesis"));
        let head = &o.clock().tracks()[0].layers()[0][0];
        assert_eq!(head.filter(), &unit_filter(o.digest(), &cfg().hash));
        assert_eq!(o.clock().depths().into_iter().collect::<Vec<_>>(), [1]);
    }

    #[test]
    fn created_objects_are_never_causal() {
        let c = cfg();
        let mut collisions = 0;
        let mut non_causal = 0;
        for i in 0..1000u32 {
            let a = Obj::create(i.to_le_bytes().to_vec(), &c).unwrap();
            let b = Obj::create((i + 5000).to_le_bytes().to_vec(), &c).unwrap();
            let mut ia = hash_indices(a.digest(), &c.hash);
            let mut ib = hash_indices(b.digest(), &c.hash);
            ia.sort_unstable();
            ia.dedup();
            ib.sort_unstable();
            ib.dedup();
            let v = a.clock().compare(b.clock()).unwrap();
            if ia == ib {
                collisions += 1;
            } else if matches!(v, CausalVerdict::Concurrent | CausalVerdict::Indeterminate) {
                non_causal += 1;
            }
        }
        assert_eq!(collisions + non_causal, 1000);
    }

    #[test]
    fn child_after_parent_and_merge_depths() {
        let reg = registry();
        let mut x = Obj::create(b"x".to_vec(), &cfg()).unwrap();
        for _ in 0..4 {
            x = Obj::mutate(&reg, 0, &[&x], b"+").unwrap();
        }
        let mut y = Obj::create(b"y".to_vec(), &cfg()).unwrap();
        for _ in 0..8 {
            y = Obj::mutate(&reg, 0, &[&y], b"-").unwrap();
        }
        assert_eq!(x.clock().max_depth(), 5);
        assert_eq!(y.clock().max_depth(), 9);
        let c = Obj::mutate(&reg, 0, &[&x], b"!").unwrap();
        assert_eq!(c.clock().compare(x.clock()).unwrap(), CausalVerdict::StrictlyAfter);
        let m = Obj::mutate(&reg, 1, &[&x, &y], b"").unwrap();
        assert_eq!(m.state(), b"x++++|y--------");
        assert_eq!(m.clock().depths().into_iter().collect::<Vec<_>>(), [6, 10]);
        assert!(m.clock().compare(x.clock()).unwrap().is_after());
        assert!(m.clock().compare(y.clock()).unwrap().is_after());
    }

    #[test]
    fn chain_of_thirty_agrees_with_recorder() {
        let reg = registry();
        let mut rec = Recorder::new();
        let mut objs = alloc::vec![rec.create(b"g".to_vec(), &cfg(), 0).unwrap()];
        for i in 0..30u8 {
            let next = rec.mutate(&reg, 0, &[objs.last().unwrap()], &[i], 0).unwrap();
            objs.push(next);
        }
        for (i, a) in objs.iter().enumerate() {
            for b in &objs[i + 1..] {
                let truth = rec.dag.reaches(a.lineage().unwrap(), b.lineage().unwrap()).unwrap();
                assert!(truth);
                let v = b.clock().compare(a.clock()).unwrap();
                let gap = b.clock().max_depth() - a.clock().max_depth();
                if gap < b.clock().window() {
                    assert_eq!(v, CausalVerdict::StrictlyAfter, "gap {gap}");
                } else {
                    assert_eq!(v, CausalVerdict::Indeterminate, "gap {gap}");
                }
            }
        }
    }

    #[test]
    fn deterministic_and_round_trips() {
        let reg = registry();
        let build = || {
            let a = Obj::create(b"a".to_vec(), &cfg()).unwrap();
            let b = Obj::create(b"b".to_vec(), &cfg()).unwrap();
            Obj::mutate(&reg, 1, &[&a, &b], b"").unwrap()
        };
        let (m1, m2) = (build(), build());
        assert_eq!(m1.encode(), m2.encode());
        assert_eq!(Obj::decode(&m1.encode()).unwrap(), m1);
        assert!(Obj::decode(&m1.encode()[..10]).is_err());
    }
}

//! Proofs that an object was derived from genesis states by registered
//! functions.
//!
//! [`TranscriptBackend`] is the reference backend: the proof is the whole
//! derivation transcript and verification re-executes it. Proof size and
//! verification time therefore grow linearly with history length; a succinct
//! backend can implement [`ProofBackend`] without changing callers.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;

use sha2::{Digest as _, Sha256};

use crate::codec::{Reader, Writer};
use crate::hash::{digest, Digest};
use crate::object::{MutationRegistry, Obj};
use crate::{DobcConfig, Error};

pub trait ProofBackend {
    type Proof: Clone;

    fn prove_genesis(&self, obj: &Obj) -> Self::Proof;

    /// Proof for `child = mutate(fn_id, parents, arg)` from the parents'
    /// proofs, given in the same order as `parents`.
    fn prove_step(
        &self,
        prev: &[&Self::Proof],
        fn_id: u32,
        arg: &[u8],
        parents: &[&Obj],
        child: &Obj,
    ) -> Result<Self::Proof, Error>;

    fn verify(&self, obj: &Obj, proof: &Self::Proof) -> bool;
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ParentRef {
    /// Position of the parent's node in the transcript.
    pub index: u32,
    pub digest: Digest,
    pub depths: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ProofNode {
    Genesis { state: Vec<u8> },
    Step { fn_id: u32, arg: Vec<u8>, parents: Vec<ParentRef>, out: Digest },
}

/// Every node of an object's history in topological order, the object's own
/// node last, plus a commitment chained over the node hashes.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TranscriptProof {
    pub nodes: Vec<ProofNode>,
    pub commitment: Digest,
}

const MAGIC: &[u8; 4] = b"DOBP";
pub const FORMAT_MAJOR: u16 = 1;

impl TranscriptProof {
    pub fn steps(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, ProofNode::Step { .. })).count()
    }

    /// Digest of the object this transcript ends in.
    pub fn head_digest(&self) -> Option<Digest> {
        self.nodes.last().map(|n| match n {
            ProofNode::Genesis { state } => digest(state),
            ProofNode::Step { out, .. } => *out,
        })
    }

    /// Content hashes of the nodes; `None` if a parent index points forward.
    pub fn node_hashes(&self) -> Option<Vec<Digest>> {
        let mut out: Vec<Digest> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let mut h = Sha256::new();
            match node {
                ProofNode::Genesis { state } => {
                    h.update(b"genesis");
                    h.update(digest(state));
                }
                ProofNode::Step { fn_id, arg, parents, out: o } => {
                    h.update(b"step");
                    h.update(fn_id.to_le_bytes());
                    h.update((arg.len() as u64).to_le_bytes());
                    h.update(arg);
                    h.update(o);
                    h.update((parents.len() as u64).to_le_bytes());
                    for p in parents {
                        h.update(out.get(p.index as usize)?);
                        h.update(p.digest);
                        h.update((p.depths.len() as u64).to_le_bytes());
                        for d in &p.depths {
                            h.update(d.to_le_bytes());
                        }
                    }
                }
            }
            out.push(h.finalize().into());
        }
        Some(out)
    }

    /// The commitment the nodes should carry.
    pub fn recompute_commitment(&self) -> Option<Digest> {
        let hashes = self.node_hashes()?;
        let mut it = hashes.iter();
        let first = it.next()?;
        let mut c: Digest = Sha256::new().chain_update(b"dobc-transcript").chain_update(first).finalize().into();
        for h in it {
            c = Sha256::new().chain_update(c).chain_update(h).finalize().into();
        }
        Some(c)
    }

    fn sealed(nodes: Vec<ProofNode>) -> Self {
        let mut p = Self { nodes, commitment: [0; 32] };
        p.commitment = p.recompute_commitment().expect("indices point backwards");
        p
    }

    /// `"DOBP"`, format major, node count, length-prefixed node records and the
    /// 32-byte commitment.
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.raw(MAGIC);
        w.u16(FORMAT_MAJOR);
        w.u32(self.nodes.len() as u32);
        for node in &self.nodes {
            let mut rec = Writer::default();
            match node {
                ProofNode::Genesis { state } => {
                    rec.u8(0);
                    rec.bytes(state);
                }
                ProofNode::Step { fn_id, arg, parents, out } => {
                    rec.u8(1);
                    rec.u32(*fn_id);
                    rec.bytes(arg);
                    rec.raw(out);
                    rec.u8(parents.len() as u8);
                    for p in parents {
                        rec.u32(p.index);
                        rec.raw(&p.digest);
                        rec.u32(p.depths.len() as u32);
                        for d in &p.depths {
                            rec.u64(*d);
                        }
                    }
                }
            }
            w.bytes(&rec.buf);
        }
        w.raw(&self.commitment);
        w.buf
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, Error> {
        let mut r = Reader::new(bytes);
        if r.take(4)? != MAGIC {
            return Err(Error::Decode("bad proof magic"));
        }
        if r.u16()? != FORMAT_MAJOR {
            return Err(Error::Decode("unsupported proof format"));
        }
        let count = r.count(5)?;
        let mut nodes = Vec::with_capacity(count);
        for _ in 0..count {
            let mut rec = Reader::new(r.bytes()?);
            let node = match rec.u8()? {
                0 => ProofNode::Genesis { state: rec.bytes()?.to_vec() },
                1 => {
                    let fn_id = rec.u32()?;
                    let arg = rec.bytes()?.to_vec();
                    let out = rec.digest()?;
                    let n = rec.u8()?;
                    let mut parents = Vec::with_capacity(usize::from(n));
                    for _ in 0..n {
                        let index = rec.u32()?;
                        let digest = rec.digest()?;
                        let k = rec.count(8)?;
                        let depths = (0..k).map(|_| rec.u64()).collect::<Result<_, _>>()?;
                        parents.push(ParentRef { index, digest, depths });
                    }
                    ProofNode::Step { fn_id, arg, parents, out }
                }
                _ => return Err(Error::Decode("bad proof node kind")),
            };
            rec.finish()?;
            nodes.push(node);
        }
        let commitment = r.digest()?;
        r.finish()?;
        Ok(Self { nodes, commitment })
    }
}

/// Re-execution backend over a fixed registry and clock configuration.
#[derive(Clone, Debug)]
pub struct TranscriptBackend {
    registry: Arc<MutationRegistry>,
    config: DobcConfig,
}

/// Objects already re-executed, keyed by transcript node hash. A node hash
/// commits to its whole sub-history, so a hit needs no further checking.
pub type VerifyCache = BTreeMap<Digest, Obj>;

impl TranscriptBackend {
    pub fn new(registry: Arc<MutationRegistry>, config: DobcConfig) -> Self {
        Self { registry, config }
    }

    pub fn registry(&self) -> &MutationRegistry {
        &self.registry
    }

    pub fn config(&self) -> &DobcConfig {
        &self.config
    }

    /// [`ProofBackend::verify`] reusing and extending `cache`.
    pub fn verify_cached(&self, obj: &Obj, proof: &TranscriptProof, cache: &mut VerifyCache) -> bool {
        self.replay(proof, cache).is_some_and(|o| &o == obj)
    }

    fn replay(&self, proof: &TranscriptProof, cache: &mut VerifyCache) -> Option<Obj> {
        let hashes = proof.node_hashes()?;
        if proof.recompute_commitment()? != proof.commitment {
            return None;
        }
        let mut referenced = alloc::vec![false; proof.nodes.len()];
        let mut objs: Vec<Obj> = Vec::with_capacity(proof.nodes.len());
        for (i, node) in proof.nodes.iter().enumerate() {
            if let ProofNode::Step { parents, .. } = node {
                for p in parents {
                    referenced[p.index as usize] = true;
                }
            }
            if let Some(o) = cache.get(&hashes[i]) {
                objs.push(o.clone());
                continue;
            }
            let o = match node {
                ProofNode::Genesis { state } => Obj::create(state.clone(), &self.config).ok()?,
                ProofNode::Step { fn_id, arg, parents, out } => {
                    let mut ps = Vec::with_capacity(parents.len());
                    for p in parents {
                        let o = &objs[p.index as usize];
                        let depths: Vec<u64> = o.clock().depths().into_iter().collect();
                        if o.digest() != &p.digest || depths != p.depths {
                            return None;
                        }
                        ps.push(o);
                    }
                    let o = Obj::mutate(&self.registry, *fn_id, &ps, arg).ok()?;
                    if o.digest() != out {
                        return None;
                    }
                    o
                }
            };
            objs.push(o);
        }
        // a transcript carries nothing but the object's history
        let last = referenced.len() - 1;
        if referenced[..last].iter().any(|r| !r) {
            return None;
        }
        for (h, o) in hashes.into_iter().zip(&objs) {
            cache.entry(h).or_insert_with(|| o.clone());
        }
        objs.pop()
    }
}

impl ProofBackend for TranscriptBackend {
    type Proof = TranscriptProof;

    fn prove_genesis(&self, obj: &Obj) -> TranscriptProof {
        TranscriptProof::sealed(alloc::vec![ProofNode::Genesis { state: obj.state().to_vec() }])
    }

    /// Parent transcripts are unioned in commitment order, dropping nodes
    /// already present, then the new step is appended.
    fn prove_step(
        &self,
        prev: &[&TranscriptProof],
        fn_id: u32,
        arg: &[u8],
        parents: &[&Obj],
        child: &Obj,
    ) -> Result<TranscriptProof, Error> {
        if prev.len() != parents.len() {
            return Err(Error::InvalidParentProof);
        }
        for (p, o) in prev.iter().zip(parents) {
            if p.head_digest() != Some(*o.digest()) || p.recompute_commitment() != Some(p.commitment) {
                return Err(Error::InvalidParentProof);
            }
        }
        let mut order: Vec<usize> = (0..prev.len()).collect();
        order.sort_by_key(|&i| prev[i].commitment);
        let mut nodes: Vec<ProofNode> = Vec::new();
        let mut seen: BTreeMap<Digest, u32> = BTreeMap::new();
        let mut heads = alloc::vec![0u32; prev.len()];
        for &i in &order {
            let p = prev[i];
            let hashes = p.node_hashes().ok_or(Error::InvalidParentProof)?;
            let mut remap = Vec::with_capacity(p.nodes.len());
            for (node, h) in p.nodes.iter().zip(hashes) {
                let idx = *seen.entry(h).or_insert_with(|| {
                    let mut n = node.clone();
                    if let ProofNode::Step { parents, .. } = &mut n {
                        for r in parents {
                            r.index = remap[r.index as usize];
                        }
                    }
                    nodes.push(n);
                    nodes.len() as u32 - 1
                });
                remap.push(idx);
            }
            heads[i] = *remap.last().ok_or(Error::InvalidParentProof)?;
        }
        let refs = parents
            .iter()
            .zip(&heads)
            .map(|(o, &index)| ParentRef {
                index,
                digest: *o.digest(),
                depths: o.clock().depths().into_iter().collect(),
            })
            .collect();
        nodes.push(ProofNode::Step { fn_id, arg: arg.to_vec(), parents: refs, out: *child.digest() });
        Ok(TranscriptProof::sealed(nodes))
    }

    fn verify(&self, obj: &Obj, proof: &TranscriptProof) -> bool {
        self.verify_cached(obj, proof, &mut VerifyCache::new())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::HashConfig;

    fn append(p: &[&[u8]], arg: &[u8]) -> Vec<u8> {
        [p[0], arg].concat()
    }

    fn concat(p: &[&[u8]], _: &[u8]) -> Vec<u8> {
        [p[0], b"|", p[1]].concat()
    }

    fn backend() -> TranscriptBackend {
        let mut r = MutationRegistry::new();
        r.register("append", 1, append).unwrap();
        r.register("concat", 2, concat).unwrap();
        TranscriptBackend::new(Arc::new(r), DobcConfig::default_shape(HashConfig::new(64, 3, 1)))
    }

    fn step(b: &TranscriptBackend, x: &(Obj, TranscriptProof), arg: &[u8]) -> (Obj, TranscriptProof) {
        let o = Obj::mutate(b.registry(), 0, &[&x.0], arg).unwrap();
        let p = b.prove_step(&[&x.1], 0, arg, &[&x.0], &o).unwrap();
        (o, p)
    }

    fn genesis(b: &TranscriptBackend, s: &[u8]) -> (Obj, TranscriptProof) {
        let o = Obj::create(s.to_vec(), b.config()).unwrap();
        let p = b.prove_genesis(&o);
        (o, p)
    }

    #[test]
    fn genesis_commitment() {
        let b = backend();
        let (o, p) = genesis(&b, b"s0");
        assert_eq!(p.steps(), 0);
        let want: Digest = Sha256::new()
            .chain_update(b"dobc-transcript")
            .chain_update(Sha256::new().chain_update(b"genesis").chain_update(digest(b"s0")).finalize())
            .finalize()
            .into();
        assert_eq!(p.commitment, want);
        assert!(b.verify(&o, &p));
    }

    #[test]
    fn chain_verifies_and_grows_linearly() {
        let b = backend();
        let mut x = genesis(&b, b"g");
        let mut sizes = Vec::new();
        for i in 0..20u8 {
            x = step(&b, &x, &[i]);
            assert!(b.verify(&x.0, &x.1));
            sizes.push(x.1.encode().len());
        }
        assert_eq!(x.1.steps(), 20);
        assert_eq!(x.1.steps() as u64, x.0.clock().max_depth() - 1);
        let diffs: Vec<usize> = sizes.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(diffs.iter().all(|&d| d > 0 && d < 200));
    }

    #[test]
    fn merge_dedups_shared_history() {
        let b = backend();
        let g = genesis(&b, b"g");
        let l = step(&b, &g, b"l");
        let r = step(&b, &g, b"r");
        let m = Obj::mutate(b.registry(), 1, &[&l.0, &r.0], b"").unwrap();
        let p = b.prove_step(&[&l.1, &r.1], 1, b"", &[&l.0, &r.0], &m).unwrap();
        assert_eq!(p.nodes.len(), 4);
        assert!(b.verify(&m, &p));
        // argument order changes the state but not the transcript layout
        let m2 = Obj::mutate(b.registry(), 1, &[&r.0, &l.0], b"").unwrap();
        let p2 = b.prove_step(&[&r.1, &l.1], 1, b"", &[&r.0, &l.0], &m2).unwrap();
        assert_eq!(p.nodes[..3], p2.nodes[..3]);
        assert!(b.verify(&m2, &p2));
        assert!(!b.verify(&m, &p2));
    }

    #[test]
    fn rejects_tampering() {
        let b = backend();
        let mut x = genesis(&b, b"g");
        for i in 0..5u8 {
            x = step(&b, &x, &[i]);
        }
        let (o, p) = x;
        let mut bad = p.clone();
        if let ProofNode::Step { arg, .. } = &mut bad.nodes[2] {
            arg[0] ^= 1;
        }
        assert!(!b.verify(&o, &bad));
        bad.commitment = bad.recompute_commitment().unwrap();
        assert!(!b.verify(&o, &bad));

        let mut swapped = p.clone();
        swapped.nodes.swap(2, 3);
        assert!(!b.verify(&o, &swapped));

        let other = Obj::mutate(b.registry(), 0, &[&o], b"z").unwrap();
        assert!(!b.verify(&other, &p));
        let retimed = o.clone().with_clock(o.clock().tick(o.digest()));
        assert!(!b.verify(&retimed, &p));

        let wrong_parent = b.prove_step(&[&p], 0, b"", &[&other], &other);
        assert_eq!(wrong_parent, Err(Error::InvalidParentProof));
    }

    #[test]
    fn cache_gives_same_answers() {
        let b = backend();
        let mut cache = VerifyCache::new();
        let mut x = genesis(&b, b"g");
        for i in 0..10u8 {
            x = step(&b, &x, &[i]);
            assert!(b.verify_cached(&x.0, &x.1, &mut cache));
        }
        let mut bad = x.1.clone();
        bad.commitment[0] ^= 1;
        assert!(!b.verify_cached(&x.0, &bad, &mut cache));
    }

    #[test]
    fn encoding_round_trip() {
        let b = backend();
        let g = genesis(&b, b"g");
        let l = step(&b, &g, b"l");
        let r = step(&b, &g, b"r");
        let m = Obj::mutate(b.registry(), 1, &[&l.0, &r.0], b"").unwrap();
        let p = b.prove_step(&[&l.1, &r.1], 1, b"", &[&l.0, &r.0], &m).unwrap();
        let bytes = p.encode();
        assert_eq!(TranscriptProof::decode(&bytes).unwrap(), p);
        let mut v2 = bytes.clone();
        v2[4] = 9;
        assert!(TranscriptProof::decode(&v2).is_err());
        assert!(TranscriptProof::decode(&bytes[..bytes.len() - 1]).is_err());
    }
}

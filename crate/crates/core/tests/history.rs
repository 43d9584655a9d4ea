//! Objects, the derivation recorder and proofs working together.

use std::sync::Arc;

use dobc_core::object::{MutationRegistry, Obj, Recorder};
use dobc_core::proof::{ProofBackend, TranscriptBackend, TranscriptProof};
use dobc_core::{CausalVerdict, DobcConfig, HashConfig, MergeStrategy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn push(p: &[&[u8]], arg: &[u8]) -> Vec<u8> {
    [p[0], arg].concat()
}

fn join(p: &[&[u8]], _: &[u8]) -> Vec<u8> {
    let (a, b) = if p[0] <= p[1] { (p[0], p[1]) } else { (p[1], p[0]) };
    [a, b"+", b].concat()
}

fn backend(strategy: MergeStrategy) -> TranscriptBackend {
    let mut r = MutationRegistry::new();
    r.register("push", 1, push).unwrap();
    r.register("join", 2, join).unwrap();
    let cfg = DobcConfig::default_shape(HashConfig::new(128, 3, 2)).with_strategy(strategy);
    TranscriptBackend::new(Arc::new(r), cfg)
}

/// A random history of `n` objects with their proofs, recorded in a DAG.
fn history(b: &TranscriptBackend, n: usize, seed: u64) -> (Recorder, Vec<(Obj, TranscriptProof)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rec = Recorder::new();
    let mut objs: Vec<(Obj, TranscriptProof)> = Vec::new();
    for i in 0..n {
        let roll: f64 = rng.gen();
        let next = if objs.is_empty() || roll < 0.05 {
            let o = rec.create(format!("g{i}").into_bytes(), b.config(), 0).unwrap();
            let p = b.prove_genesis(&o);
            (o, p)
        } else if roll < 0.25 && objs.len() > 1 {
            let x = rng.gen_range(0..objs.len());
            let y = (x + 1 + rng.gen_range(0..objs.len() - 1)) % objs.len();
            let (a, b_) = (&objs[x], &objs[y]);
            let o = rec.mutate(b.registry(), 1, &[&a.0, &b_.0], b"", 0).unwrap();
            let p = b.prove_step(&[&a.1, &b_.1], 1, b"", &[&a.0, &b_.0], &o).unwrap();
            (o, p)
        } else {
            let x = &objs[rng.gen_range(objs.len().saturating_sub(8)..objs.len())];
            let arg = [i as u8];
            let o = rec.mutate(b.registry(), 0, &[&x.0], &arg, 0).unwrap();
            let p = b.prove_step(&[&x.1], 0, &arg, &[&x.0], &o).unwrap();
            (o, p)
        };
        objs.push(next);
    }
    (rec, objs)
}

#[test]
fn honest_histories_verify_for_every_strategy() {
    for s in [MergeStrategy::Extending, MergeStrategy::Maxima, MergeStrategy::Hybrid(2)] {
        let b = backend(s);
        let (_, objs) = history(&b, 80, 3);
        for (o, p) in &objs {
            assert!(b.verify(o, p));
            assert_eq!(&TranscriptProof::decode(&p.encode()).unwrap(), p);
        }
    }
}

#[test]
fn proofs_are_deterministic() {
    let b = backend(MergeStrategy::Maxima);
    let (_, x) = history(&b, 50, 11);
    let (_, y) = history(&b, 50, 11);
    assert_eq!(x, y);
}

#[test]
fn object_clocks_never_miss_recorded_ancestry() {
    let b = backend(MergeStrategy::Maxima);
    let (rec, objs) = history(&b, 120, 5);
    for (i, (a, _)) in objs.iter().enumerate() {
        for (c, _) in &objs[i + 1..] {
            let truth = rec.dag.reaches(a.lineage().unwrap(), c.lineage().unwrap()).unwrap();
            let v = c.clock().compare(a.clock()).unwrap();
            if truth && v != CausalVerdict::Indeterminate {
                assert!(v.is_after(), "{v:?}");
            }
        }
    }
}

#[test]
fn swapping_proofs_between_objects_fails() {
    let b = backend(MergeStrategy::Maxima);
    let (_, objs) = history(&b, 40, 8);
    for w in objs.windows(2) {
        if w[0].0 != w[1].0 {
            assert!(!b.verify(&w[0].0, &w[1].1));
        }
    }
}

#[test]
fn object_bytes_are_canonical() {
    let b = backend(MergeStrategy::Maxima);
    let (_, objs) = history(&b, 30, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (o, p) in &objs {
        let bytes = o.encode();
        for _ in 0..20 {
            let mut t = bytes.clone();
            let i = rng.gen_range(0..t.len());
            t[i] ^= 1 << rng.gen_range(0..8);
            if let Ok(forged) = Obj::decode(&t) {
                assert_ne!(&forged, o);
                assert!(!b.verify(&forged, p));
            }
        }
    }
}

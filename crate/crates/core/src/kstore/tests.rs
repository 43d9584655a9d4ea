use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use super::values::{decode_u64s, encode_u64s, MAXIMUM};
use super::*;
use crate::object::MutationRegistry;
use crate::proof::ProofBackend;

fn quiet(nodes: u32, replicas: usize) -> SimSpec {
    SimSpec { nodes, replicas, ops: 0, drop_rate: 0.0, delays: vec![1], ..SimSpec::new(7) }
}

fn op(key: &str, kind: OpKind, entry: u32, leader: Option<u32>) -> ClientOp {
    ClientOp { key: key.to_string(), kind, entry, leader }
}

fn num(x: u64) -> Vec<u8> {
    encode_u64s([x])
}

#[test]
fn ring_groups() {
    let one = Ring::new(1, 8).unwrap();
    assert_eq!(one.replica_group(b"k", 1).unwrap(), [0]);
    let mut ring = Ring::new(8, 64).unwrap();
    assert_eq!(
        ring.replica_group(b"k", 9),
        Err(Error::GroupTooLarge { requested: 9, available: 8 })
    );
    let g = ring.replica_group(b"some key", 3).unwrap();
    let mut d = g.clone();
    d.sort_unstable();
    d.dedup();
    assert_eq!(d.len(), 3);
    let outsider = (0..8).find(|n| !g.contains(n)).unwrap();
    ring.remove_node(outsider);
    assert_eq!(ring.replica_group(b"some key", 3).unwrap(), g);
}

#[test]
fn ring_spreads_keys() {
    let ring = Ring::new(8, 64).unwrap();
    let mut share = [0u32; 8];
    for i in 0..10_000u32 {
        share[ring.replica_group(&i.to_le_bytes(), 1).unwrap()[0] as usize] += 1;
    }
    let uniform = 10_000 / 8;
    assert!(share.iter().all(|&s| s > uniform / 2 && s < uniform * 2), "{share:?}");
}

fn left(p: &[&[u8]], _: &[u8]) -> Vec<u8> {
    p[0].to_vec()
}

fn sum(p: &[&[u8]], _: &[u8]) -> Vec<u8> {
    let s: u64 = p.iter().flat_map(|x| decode_u64s(values::value(x))).sum();
    values::state(values::tag(p[0]).unwrap(), &num(s))
}

#[test]
fn merge_algebra_is_checked() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let reg = values::registry(&builtin_merge_fns()).unwrap();
    for (i, m) in builtin_merge_fns().iter().enumerate() {
        values::check_merge_fn(&reg, i as u32 + 1, m, &mut rng, 256).unwrap();
    }
    let bad = [
        MergeFn { name: "left", f: left, sample: MAXIMUM.sample },
        MergeFn { name: "sum", f: sum, sample: MAXIMUM.sample },
    ];
    for m in bad {
        let spec = SimSpec { merge_fn: m.name.to_string(), ..quiet(3, 3) };
        assert!(matches!(SimWorld::with_merge_fns(spec, &[m]), Err(Error::Scenario(_))));
    }
    let spec = SimSpec { merge_fn: "median".to_string(), ..quiet(3, 3) };
    assert!(SimWorld::new(spec).is_err());
}

#[test]
fn receive_rule() {
    let spec = quiet(3, 3);
    let reg: MutationRegistry = values::registry(&builtin_merge_fns()).unwrap();
    let g = Obj::create(values::state(1, &num(4)), &spec.clock).unwrap();
    let a = Obj::mutate(&reg, values::SET_FN, &[&g], &num(5)).unwrap();
    let b = Obj::mutate(&reg, values::SET_FN, &[&g], &num(9)).unwrap();
    assert_eq!(receive_action(Some(&a), &g, true), Ok(Action::Ignore));
    assert_eq!(receive_action(Some(&g), &a, true), Ok(Action::Replace));
    assert_eq!(receive_action(Some(&g), &a, false), Ok(Action::Reject));
    assert_eq!(receive_action(None, &a, true), Ok(Action::Replace));
    assert_eq!(receive_action(Some(&a), &a, true), Ok(Action::Ignore));
    assert_eq!(receive_action(Some(&a), &b, true), Ok(Action::Merge));
}

#[test]
fn insert_then_get() {
    let mut w = SimWorld::new(quiet(4, 3)).unwrap();
    w.schedule(1, op("k", OpKind::Insert { value: num(42) }, 0, None));
    w.schedule(10, op("k", OpKind::Get, 1, None));
    let r = w.run();
    assert!(r.converged);
    assert_eq!(w.gets(), [(10, "k".to_string(), Some(num(42)))]);
    for n in w.ring().replica_group(b"k", 3).unwrap() {
        assert_eq!(w.store(n)["k"].value(), num(42));
    }
}

#[test]
fn update_at_non_creator_and_without_local_object() {
    let mut w = SimWorld::new(quiet(4, 3)).unwrap();
    let g = w.ring().replica_group(b"k", 3).unwrap();
    w.schedule(1, op("k", OpKind::Insert { value: num(1) }, 0, Some(g[0])));
    // the insert has not arrived at g[1] yet
    w.schedule(1, op("k", OpKind::Update { value: num(3) }, 0, Some(g[1])));
    w.schedule(5, op("k", OpKind::Update { value: num(2) }, 0, Some(g[2])));
    let r = w.run();
    assert!(r.converged);
    assert_eq!(r.failed_ops, 1);
    for &n in &g {
        assert_eq!(w.store(n)["k"].value(), num(2));
        assert_eq!(w.store(n)["k"].obj.clock().max_depth(), 2);
    }
}

#[test]
fn concurrent_values_merge_to_maximum() {
    let mut w = SimWorld::new(quiet(5, 3)).unwrap();
    let g = w.ring().replica_group(b"k", 3).unwrap();
    w.schedule(1, op("k", OpKind::Insert { value: num(0) }, 0, Some(g[0])));
    w.schedule(5, op("k", OpKind::Update { value: num(4) }, 0, Some(g[1])));
    w.schedule(5, op("k", OpKind::Update { value: num(9) }, 0, Some(g[2])));
    let r = w.run();
    assert!(r.converged, "{r:?}");
    for &n in &g {
        assert_eq!(w.store(n)["k"].value(), num(9));
    }
}

#[test]
fn partition_serves_stale_reads_then_heals() {
    let mut spec = quiet(3, 3);
    spec.partitions = vec![Partition { start: 10, end: 40, side: vec![2] }];
    let mut w = SimWorld::new(spec).unwrap();
    w.schedule(1, op("k", OpKind::Insert { value: num(1) }, 0, Some(0)));
    w.schedule(12, op("k", OpKind::Update { value: num(7) }, 0, Some(0)));
    w.schedule(20, op("k", OpKind::Get, 2, None));
    let r = w.run();
    assert!(r.converged);
    assert_eq!(w.gets()[0].2, Some(num(1)));
    assert_eq!(w.store(2)["k"].value(), num(7));
}

#[test]
fn anti_entropy_fills_a_missing_key() {
    let mut spec = quiet(2, 2);
    spec.partitions = vec![Partition { start: 0, end: 3, side: vec![1] }];
    let mut w = SimWorld::new(spec).unwrap();
    w.schedule(1, op("k", OpKind::Insert { value: num(5) }, 0, Some(0)));
    let r = w.run();
    assert!(r.converged);
    assert_eq!(r.rounds_to_converge, 1);
    assert_eq!(w.store(0)["k"], w.store(1)["k"]);
}

fn honest_stores_verify(w: &SimWorld) {
    for n in (0..w.spec().nodes).filter(|n| !w.spec().byzantine.contains(n)) {
        for e in w.store(n).values() {
            assert!(w.backend().verify(&e.obj, &e.proof));
        }
    }
}

#[test]
fn lossy_network_converges_deterministically() {
    let mut spec = SimSpec::new(3);
    spec.ops = 120;
    spec.partitions = vec![Partition { start: 60, end: 140, side: vec![0, 1, 2] }];
    let run = || {
        let mut w = SimWorld::new(spec.clone()).unwrap();
        let r = w.run();
        let stores: Vec<_> = (0..8).map(|n| w.store(n).clone()).collect();
        (r, stores, w)
    };
    let (r1, s1, w) = run();
    let (r2, s2, _) = run();
    assert!(r1.converged, "{r1:?}");
    assert!(r1.dropped > 0);
    assert_eq!(r1, r2);
    assert_eq!(s1, s2);
    honest_stores_verify(&w);
}

#[test]
fn forged_clocks_are_rejected() {
    let mut spec = SimSpec::new(5);
    spec.ops = 120;
    spec.byzantine = vec![3];
    let mut w = SimWorld::new(spec).unwrap();
    let r = w.run();
    assert!(r.converged, "{r:?}");
    assert!(r.rejected_count > 0);
    honest_stores_verify(&w);
}

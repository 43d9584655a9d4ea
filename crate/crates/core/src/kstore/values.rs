//! Stored values and the functions that derive them.
//!
//! A stored state is the id of the key's merge mutation (`u32` LE) followed by
//! the value bytes, so the object itself carries its merge function.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::object::{MutationFn, MutationRegistry};
use crate::Error;

/// Mutation id of the value-replacing update, always registered first.
pub const SET_FN: u32 = 0;

/// A named merge function plus a sampler for its value domain, used both to
/// draw workload values and to check the function's algebra.
#[derive(Clone, Copy, Debug)]
pub struct MergeFn {
    pub name: &'static str,
    pub f: MutationFn,
    pub sample: fn(&mut ChaCha8Rng) -> Vec<u8>,
}

pub fn tag(state: &[u8]) -> Option<u32> {
    Some(u32::from_le_bytes(state.get(..4)?.try_into().ok()?))
}

pub fn value(state: &[u8]) -> &[u8] {
    state.get(4..).unwrap_or(&[])
}

pub fn state(tag: u32, value: &[u8]) -> Vec<u8> {
    [&tag.to_le_bytes()[..], value].concat()
}

fn set(p: &[&[u8]], arg: &[u8]) -> Vec<u8> {
    [p[0].get(..4).unwrap_or(&[0; 4]), arg].concat()
}

fn words(v: &[u8]) -> impl Iterator<Item = u64> + '_ {
    v.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().expect("8-byte chunk")))
}

pub fn encode_u64s(xs: impl IntoIterator<Item = u64>) -> Vec<u8> {
    xs.into_iter().flat_map(u64::to_le_bytes).collect()
}

pub fn decode_u64s(v: &[u8]) -> Vec<u64> {
    words(v).collect()
}

/// The smaller parent tag, so the result does not depend on argument order.
fn merged_tag(p: &[&[u8]]) -> u32 {
    tag(p[0]).unwrap_or(0).min(tag(p[1]).unwrap_or(0))
}

fn max(p: &[&[u8]], _: &[u8]) -> Vec<u8> {
    let m = words(value(p[0])).chain(words(value(p[1]))).max();
    state(merged_tag(p), &encode_u64s(m))
}

fn union(p: &[&[u8]], _: &[u8]) -> Vec<u8> {
    let s: BTreeSet<u64> = words(value(p[0])).chain(words(value(p[1]))).collect();
    state(merged_tag(p), &encode_u64s(s))
}

fn sample_number(rng: &mut ChaCha8Rng) -> Vec<u8> {
    encode_u64s([rng.gen_range(0..1000u64)])
}

fn sample_set(rng: &mut ChaCha8Rng) -> Vec<u8> {
    let n = rng.gen_range(0..4);
    let s: BTreeSet<u64> = (0..n).map(|_| rng.gen_range(0..64u64)).collect();
    encode_u64s(s)
}

pub const MAXIMUM: MergeFn = MergeFn { name: "maximum", f: max, sample: sample_number };
pub const UNION: MergeFn = MergeFn { name: "union", f: union, sample: sample_set };

pub fn builtin_merge_fns() -> [MergeFn; 2] {
    [MAXIMUM, UNION]
}

/// Registry with `set` at [`SET_FN`] followed by `merges` in order.
pub fn registry(merges: &[MergeFn]) -> Result<MutationRegistry, Error> {
    let mut r = MutationRegistry::new();
    r.register("set", 1, set)?;
    for m in merges {
        r.register(m.name, 2, m.f)?;
    }
    Ok(r)
}

/// Rejects a merge function that is not commutative and idempotent on
/// `samples` random pairs from its own domain.
pub fn check_merge_fn(
    registry: &MutationRegistry,
    fn_id: u32,
    m: &MergeFn,
    rng: &mut ChaCha8Rng,
    samples: usize,
) -> Result<(), Error> {
    let fail = |what: &str| Err(Error::Scenario(format!("merge function {} is not {what}", m.name)));
    for _ in 0..samples {
        let a = state(fn_id, &(m.sample)(rng));
        let b = state(fn_id, &(m.sample)(rng));
        if registry.apply(fn_id, &[&a, &b], &[])? != registry.apply(fn_id, &[&b, &a], &[])? {
            return fail("commutative");
        }
        if registry.apply(fn_id, &[&a, &a], &[])? != a {
            return fail("idempotent");
        }
    }
    Ok(())
}

//! Canonical clock serialization.
//!
//! ```text
//! "DOBC" version:u8 body_len:u32 body
//! body   = config tracks
//! config = n:u32 m:u32 seed:u64 layers:u8 (slots:u32 width:u8)* decay:u8 strategy:u8 p:u32
//! tracks = count:u32 (depths:u32 depth:u64* (slots:u32 slot*)*per layer)*
//! slot   = newest_age:u32 oldest_age:u32 clamp_floor:u16 counters:bit-packed
//! ```
//! Bit-packed counters take `ceil(n * width / 8)` bytes, LSB first.

use alloc::collections::BTreeSet;
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::{DecayMode, Dobc, DobcConfig, MergeStrategy, Slot, Track};
use crate::codec::{pack_bits, unpack_bits, Reader, Writer};
use crate::hash::HashConfig;
use crate::vbf::Vbf;
use crate::Error;

const MAGIC: &[u8; 4] = b"DOBC";
const VERSION: u8 = 1;

impl Dobc {
    pub fn encode(&self) -> Vec<u8> {
        let mut body = Writer::default();
        encode_config(&self.config, &mut body);
        body.u32(self.tracks.len() as u32);
        for t in &self.tracks {
            body.u32(t.depths.len() as u32);
            for &d in &t.depths {
                body.u64(d);
            }
            encode_layers(t, &mut body);
        }
        let mut out = Writer::default();
        out.raw(MAGIC);
        out.u8(VERSION);
        out.bytes(&body.buf);
        out.buf
    }

    /// Bytes taken by the slot lists alone: the clock's size without its
    /// configuration header and depth bookkeeping.
    pub fn encoded_filter_len(&self) -> usize {
        let mut w = Writer::default();
        for t in &self.tracks {
            encode_layers(t, &mut w);
        }
        w.buf.len()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, Error> {
        let mut r = Reader::new(bytes);
        if r.take(4)? != MAGIC {
            return Err(Error::Decode("bad clock magic"));
        }
        if r.u8()? != VERSION {
            return Err(Error::Decode("unsupported clock version"));
        }
        let body = r.bytes()?;
        r.finish()?;
        let mut r = Reader::new(body);
        let config = decode_config(&mut r)?;
        config.validate()?;
        let n = config.hash.n as usize;
        let mut tracks = Vec::new();
        for _ in 0..r.count(8)? {
            let mut depths = BTreeSet::new();
            for _ in 0..r.count(8)? {
                let d = r.u64()?;
                if depths.last().is_some_and(|&last| last >= d) {
                    return Err(Error::Decode("depths not strictly increasing"));
                }
                depths.insert(d);
            }
            if depths.is_empty() {
                return Err(Error::Decode("track without depth"));
            }
            let mut layers = Vec::with_capacity(config.num_layers());
            for &width in &config.bit_widths {
                let mut slots = Vec::new();
                for _ in 0..r.count(9)? {
                    let newest = r.u32()?;
                    let oldest = r.u32()?;
                    if newest > oldest {
                        return Err(Error::Decode("inverted slot range"));
                    }
                    let floor = r.u16()?;
                    let valid = floor == 0
                        || (u32::from(floor) + 1).is_power_of_two()
                            && u32::from(floor) <= crate::vbf::max_value(width);
                    if !valid {
                        return Err(Error::Decode("bad clamp floor"));
                    }
                    let packed = r.take((n * usize::from(width)).div_ceil(8))?;
                    let filter = Vbf::from_counters(width, unpack_bits(packed, width, n))?;
                    let mut repacked = Vec::with_capacity(packed.len());
                    pack_bits(filter.counters(), width, &mut repacked);
                    if repacked != packed {
                        return Err(Error::Decode("non-zero padding bits"));
                    }
                    slots.push(Slot::new(filter, newest, oldest).with_clamp_floor(floor));
                }
                layers.push(slots);
            }
            tracks.push(Track { depths, layers });
        }
        r.finish()?;
        if tracks.is_empty() {
            return Err(Error::Decode("clock without tracks"));
        }
        let clock = Dobc { config: Arc::new(config), tracks };
        let mut canon = clock.clone();
        canon.canonicalize();
        if canon != clock {
            return Err(Error::Decode("tracks not in canonical order"));
        }
        Ok(clock)
    }
}

fn encode_layers(t: &Track, w: &mut Writer) {
    for layer in &t.layers {
        w.u32(layer.len() as u32);
        for s in layer {
            w.u32(s.newest_age);
            w.u32(s.oldest_age);
            w.u16(s.clamp_floor);
            pack_bits(s.filter.counters(), s.filter.bit_width(), &mut w.buf);
        }
    }
}

pub(crate) fn encode_config(c: &DobcConfig, w: &mut Writer) {
    w.u32(c.hash.n);
    w.u32(c.hash.m);
    w.u64(c.hash.seed);
    w.u8(c.num_layers() as u8);
    for (&s, &b) in c.slots_per_layer.iter().zip(&c.bit_widths) {
        w.u32(s);
        w.u8(b);
    }
    w.u8(match c.decay_mode {
        DecayMode::Complete => 0,
        DecayMode::Incomplete => 1,
    });
    let (tag, p) = match c.merge_strategy {
        MergeStrategy::Extending => (0, 0),
        MergeStrategy::Maxima => (1, 0),
        MergeStrategy::Hybrid(p) => (2, p),
    };
    w.u8(tag);
    w.u32(p);
}

fn decode_config(r: &mut Reader) -> Result<DobcConfig, Error> {
    let hash = HashConfig::new(r.u32()?, r.u32()?, r.u64()?);
    let layers = r.u8()?;
    let mut slots_per_layer = Vec::new();
    let mut bit_widths = Vec::new();
    for _ in 0..layers {
        slots_per_layer.push(r.u32()?);
        bit_widths.push(r.u8()?);
    }
    let decay_mode = match r.u8()? {
        0 => DecayMode::Complete,
        1 => DecayMode::Incomplete,
        _ => return Err(Error::Decode("bad decay mode")),
    };
    let tag = r.u8()?;
    let p = r.u32()?;
    let merge_strategy = match (tag, p) {
        (0, 0) => MergeStrategy::Extending,
        (1, 0) => MergeStrategy::Maxima,
        (2, p) => MergeStrategy::Hybrid(p),
        _ => return Err(Error::Decode("bad merge strategy")),
    };
    Ok(DobcConfig { hash, slots_per_layer, bit_widths, decay_mode, merge_strategy })
}

use alloc::collections::BTreeSet;
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::{Dobc, Slot, Track};
use crate::{CausalVerdict, Error};

impl Dobc {
    /// Relation of `self` to `other`.
    ///
    /// Every (track, depth) anchoring of one clock is compared with every
    /// anchoring of the other on the depth intervals both can express exactly.
    /// A descendant always has the larger maximum depth, and the pairing that
    /// follows its true lineage either aligns and dominates or does not align
    /// at all. So a causal answer needs a dominating pairing on the deeper
    /// side, and `Concurrent` needs every such pairing to have aligned;
    /// anything else is `Indeterminate`.
    pub fn compare(&self, other: &Dobc) -> Result<CausalVerdict, Error> {
        if !Arc::ptr_eq(&self.config, &other.config) && self.config != other.config {
            return Err(Error::ConfigMismatch);
        }
        if self.tracks == other.tracks {
            return Ok(CausalVerdict::AfterOrEqual);
        }
        let (max_a, max_b) = (self.max_depth(), other.max_depth());
        let mut seen = Seen::default();
        for ta in &self.tracks {
            let ra = ranges(ta);
            for tb in &other.tracks {
                let rb = ranges(tb);
                // a pairing's outcome depends only on da - db
                for delta in overlapping_deltas(ta, tb, &mut seen) {
                    let v = compare_shifted(&ra, &rb, delta);
                    seen.record(delta, v);
                    if (seen.after && max_a > max_b) || (seen.before && max_b > max_a) {
                        return Ok(seen.verdict(max_a, max_b));
                    }
                }
            }
        }
        Ok(seen.verdict(max_a, max_b))
    }
}

#[derive(Default)]
struct Seen {
    after: bool,
    before: bool,
    equal: bool,
    aligned: bool,
    /// Some pairing with the left side deeper did not align.
    gap_after: bool,
    gap_before: bool,
}

impl Seen {
    fn record(&mut self, delta: i64, v: Option<CausalVerdict>) {
        match v {
            Some(v) => {
                self.aligned = true;
                match v {
                    CausalVerdict::StrictlyAfter => self.after = true,
                    CausalVerdict::StrictlyBefore => self.before = true,
                    CausalVerdict::AfterOrEqual => self.equal = true,
                    _ => {}
                }
            }
            None => self.gap(delta),
        }
    }

    fn gap(&mut self, delta: i64) {
        if delta > 0 {
            self.gap_after = true;
        } else if delta < 0 {
            self.gap_before = true;
        }
    }

    fn verdict(&self, max_a: u64, max_b: u64) -> CausalVerdict {
        use CausalVerdict::*;
        if self.after && max_a > max_b {
            StrictlyAfter
        } else if self.before && max_b > max_a {
            StrictlyBefore
        } else if self.equal && max_a == max_b {
            AfterOrEqual
        } else if (self.gap_after && max_a > max_b) || (self.gap_before && max_b > max_a) {
            Indeterminate
        } else if self.aligned {
            Concurrent
        } else {
            Indeterminate
        }
    }
}

/// Depth differences `da - db` at which the two windows overlap. Pairings
/// whose windows cannot overlap are recorded as gaps directly.
fn overlapping_deltas(a: &Track, b: &Track, seen: &mut Seen) -> BTreeSet<i64> {
    let (wa, wb) = (a.window() as i64, b.window() as i64);
    let mut out = BTreeSet::new();
    if wa == 0 || wb == 0 {
        for &da in &a.depths {
            for &db in &b.depths {
                seen.gap(da as i64 - db as i64);
            }
        }
        return out;
    }
    let (hi, lo) = (wa - 1, 1 - wb);
    let (min_a, max_a) = bounds(&a.depths);
    let (min_b, max_b) = bounds(&b.depths);
    if max_a - min_b > hi {
        seen.gap(1);
    }
    if min_a - max_b < lo {
        seen.gap(-1);
    }
    for &da in &a.depths {
        let from = (da as i64 - hi).max(0) as u64;
        let to = (da as i64 - lo).max(0) as u64;
        for &db in b.depths.range(from..=to) {
            out.insert(da as i64 - db as i64);
        }
    }
    out
}

fn bounds(depths: &BTreeSet<u64>) -> (i64, i64) {
    let lo = depths.first().copied().unwrap_or(0) as i64;
    let hi = depths.last().copied().unwrap_or(0) as i64;
    (lo, hi)
}

/// Depth ranges of a track's slots when it sits at depth 0.
fn ranges(t: &Track) -> Vec<(i64, i64, &Slot)> {
    t.slots().map(|s| (-i64::from(s.oldest_age), -i64::from(s.newest_age), s)).collect()
}

/// `a` sits `delta` deeper than `b`. `None` when neither side can be checked
/// against the other.
fn compare_shifted(
    ra: &[(i64, i64, &Slot)],
    rb: &[(i64, i64, &Slot)],
    delta: i64,
) -> Option<CausalVerdict> {
    let shifted: Vec<(i64, i64, &Slot)> =
        ra.iter().map(|&(lo, hi, s)| (lo + delta, hi + delta, s)).collect();
    let a_dom = if delta >= 0 { covers_and_dominates(&shifted, rb) } else { None };
    let b_dom = if delta <= 0 { covers_and_dominates(rb, &shifted) } else { None };
    if a_dom.is_none() && b_dom.is_none() {
        return None;
    }
    Some(match (delta.signum(), a_dom, b_dom) {
        (1, Some(true), _) => CausalVerdict::StrictlyAfter,
        (-1, _, Some(true)) => CausalVerdict::StrictlyBefore,
        (0, Some(true), Some(true)) => CausalVerdict::AfterOrEqual,
        _ => CausalVerdict::Concurrent,
    })
}

/// Checks `upper` as a candidate descendant of `raw` on every group of
/// `upper` slots that fully covers some `raw` slot. `None` if there is no
/// such group.
fn covers_and_dominates(upper: &[(i64, i64, &Slot)], raw: &[(i64, i64, &Slot)]) -> Option<bool> {
    let groups = cover_groups(upper, raw);
    if groups.is_empty() {
        return None;
    }
    Some(groups.iter().all(|&(lo, hi)| dominates(upper, raw, lo, hi)))
}

/// Depth ranges `[lo, hi]` formed by the `upper` slots overlapping one `raw`
/// slot, kept when they cover it completely.
///
/// Every operation that moves mass between slots (decay, projection, maxima)
/// credits a descendant slot with the full mass of each ancestor slot it
/// overlaps, so along a true lineage the `upper` sum over such a range is at
/// least the `raw` sum of the slots inside it.
pub(crate) fn cover_groups(upper: &[(i64, i64, &Slot)], raw: &[(i64, i64, &Slot)]) -> Vec<(i64, i64)> {
    let mut out: Vec<(i64, i64)> = Vec::new();
    for &(rl, rh, _) in raw {
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        for &(ul, uh, _) in upper {
            if ul <= rh && uh >= rl {
                lo = lo.min(ul);
                hi = hi.max(uh);
            }
        }
        if lo <= rl && hi >= rh && !out.contains(&(lo, hi)) {
            out.push((lo, hi));
        }
    }
    out.sort_unstable();
    out
}

/// Whether the summed counters of the slots inside `[lo, hi]` are at least
/// as large on the `upper` side.
///
/// Counters on the `upper` side that may have lost mass to clamping dominate
/// anything. The `raw` side is taken at face value: a descendant inherits its
/// ancestor's clamps, so only losses on the dominating side matter.
fn dominates(upper: &[(i64, i64, &Slot)], raw: &[(i64, i64, &Slot)], lo: i64, hi: i64) -> bool {
    let inside = |r: &&(i64, i64, &Slot)| r.0 >= lo && r.1 <= hi;
    let up: Vec<&Slot> = upper.iter().filter(inside).map(|r| r.2).collect();
    let rw: Vec<&Slot> = raw.iter().filter(inside).map(|r| r.2).collect();
    let n = up.first().or(rw.first()).map_or(0, |s| s.filter().len());
    (0..n).all(|i| {
        if up.iter().any(|s| s.is_saturated(i)) {
            return true;
        }
        let x: u32 = up.iter().map(|s| u32::from(s.filter().counters()[i])).sum();
        let y: u32 = rw.iter().map(|s| u32::from(s.filter().counters()[i])).sum();
        x >= y
    })
}

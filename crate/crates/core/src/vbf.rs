//! Variable-bit counting Bloom filters.

use alloc::vec;
use alloc::vec::Vec;

use crate::Error;

/// Widest counter a [`Vbf`] stores.
pub const MAX_WIDTH: u8 = 16;

/// A fixed-length vector of saturating counters, each `bit_width` bits wide.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vbf {
    bit_width: u8,
    counters: Vec<u16>,
}

impl Vbf {
    pub fn zeroed(bit_width: u8, n: usize) -> Self {
        assert!((1..=MAX_WIDTH).contains(&bit_width), "bit width {bit_width}");
        Self { bit_width, counters: vec![0; n] }
    }

    pub fn from_counters(bit_width: u8, counters: Vec<u16>) -> Result<Self, Error> {
        if !(1..=MAX_WIDTH).contains(&bit_width) {
            return Err(Error::BitWidth(bit_width));
        }
        let max = max_value(bit_width);
        if let Some(&c) = counters.iter().find(|&&c| u32::from(c) > max) {
            return Err(Error::CounterOverflow { value: c.into(), width: bit_width });
        }
        Ok(Self { bit_width, counters })
    }

    /// Width-1 filter with set semantics over `indices`.
    pub fn unit_from_indices(n: usize, indices: &[u32]) -> Self {
        let mut f = Self::zeroed(1, n);
        for &i in indices {
            f.counters[i as usize] = 1;
        }
        f
    }

    pub fn bit_width(&self) -> u8 {
        self.bit_width
    }

    pub fn len(&self) -> usize {
        self.counters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counters.is_empty()
    }

    pub fn counters(&self) -> &[u16] {
        &self.counters
    }

    pub fn max_value(&self) -> u32 {
        max_value(self.bit_width)
    }

    /// Counter `index` sits at its cap, so its true value may be larger.
    pub fn is_saturated(&self, index: usize) -> bool {
        u32::from(self.counters[index]) == self.max_value()
    }

    /// Element-wise saturating sum of `self` and `other`, re-encoded at `out_width`.
    pub fn sum(&self, other: &Vbf, out_width: u8) -> Result<Vbf, Error> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch(self.len(), other.len()));
        }
        let mut out = self.widened(out_width)?;
        out.absorb(other);
        Ok(out)
    }

    /// Copy of `self` at a different width, saturating if it narrows.
    pub fn widened(&self, out_width: u8) -> Result<Vbf, Error> {
        if !(1..=MAX_WIDTH).contains(&out_width) {
            return Err(Error::BitWidth(out_width));
        }
        let cap = max_value(out_width);
        let counters = self
            .counters
            .iter()
            .map(|&c| u32::from(c).min(cap) as u16)
            .collect();
        Ok(Vbf { bit_width: out_width, counters })
    }

    /// Adds `other` into `self` in place, saturating at this filter's cap.
    /// Returns whether any counter was clamped.
    pub(crate) fn absorb(&mut self, other: &Vbf) -> bool {
        debug_assert_eq!(self.len(), other.len());
        let cap = self.max_value();
        let mut clamped = false;
        for (c, &o) in self.counters.iter_mut().zip(&other.counters) {
            let s = u32::from(*c) + u32::from(o);
            clamped |= s > cap;
            *c = s.min(cap) as u16;
        }
        clamped
    }

    /// Per-index maximum, kept at this filter's width.
    pub(crate) fn max_in_place(&mut self, other: &Vbf) {
        let cap = self.max_value();
        for (c, &o) in self.counters.iter_mut().zip(&other.counters) {
            *c = (*c).max((u32::from(o).min(cap)) as u16);
        }
    }

    /// True iff every counter of `self` is at least the matching counter of `other`.
    pub fn dominates(&self, other: &Vbf) -> Result<bool, Error> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch(self.len(), other.len()));
        }
        Ok(self.counters.iter().zip(&other.counters).all(|(a, b)| a >= b))
    }

    /// Bits needed to store the counters.
    pub fn size_bits(&self) -> usize {
        self.len() * usize::from(self.bit_width)
    }
}

pub(crate) const fn max_value(width: u8) -> u32 {
    (1u32 << width) - 1
}

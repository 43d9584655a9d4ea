//! Little-endian, length-prefixed byte encoding helpers.

use alloc::vec::Vec;

use crate::Error;

#[derive(Default)]
pub(crate) struct Writer {
    pub(crate) buf: Vec<u8>,
}

impl Writer {
    pub(crate) fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub(crate) fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub(crate) fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub(crate) fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub(crate) fn raw(&mut self, bytes: &[u8]) {
        self.buf.extend_from_slice(bytes);
    }

    /// `u32` length followed by the bytes.
    pub(crate) fn bytes(&mut self, bytes: &[u8]) {
        self.u32(bytes.len() as u32);
        self.raw(bytes);
    }
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        Self { buf }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8], Error> {
        if self.buf.len() < n {
            return Err(Error::Decode("unexpected end of input"));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    pub(crate) fn u8(&mut self) -> Result<u8, Error> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u16(&mut self) -> Result<u16, Error> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    pub(crate) fn u32(&mut self) -> Result<u32, Error> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    pub(crate) fn u64(&mut self) -> Result<u64, Error> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    pub(crate) fn digest(&mut self) -> Result<[u8; 32], Error> {
        Ok(self.take(32)?.try_into().expect("32 bytes"))
    }

    pub(crate) fn bytes(&mut self) -> Result<&'a [u8], Error> {
        let n = self.u32()? as usize;
        self.take(n)
    }

    /// Reads a `u32` element count, refusing counts the remaining input
    /// cannot hold at `min_size` bytes each.
    pub(crate) fn count(&mut self, min_size: usize) -> Result<usize, Error> {
        let n = self.u32()? as usize;
        if n.saturating_mul(min_size.max(1)) > self.buf.len() {
            return Err(Error::Decode("count exceeds input"));
        }
        Ok(n)
    }

    /// Everything not read yet.
    pub(crate) fn rest(self) -> &'a [u8] {
        self.buf
    }

    pub(crate) fn finish(self) -> Result<(), Error> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(Error::Decode("trailing bytes"))
        }
    }
}

/// Packs `width`-bit counters LSB-first into `ceil(len * width / 8)` bytes.
pub(crate) fn pack_bits(values: &[u16], width: u8, out: &mut Vec<u8>) {
    let total = values.len() * usize::from(width);
    let start = out.len();
    out.resize(start + total.div_ceil(8), 0);
    for (i, &v) in values.iter().enumerate() {
        for b in 0..usize::from(width) {
            if v >> b & 1 == 1 {
                let bit = i * usize::from(width) + b;
                out[start + bit / 8] |= 1 << (bit % 8);
            }
        }
    }
}

pub(crate) fn unpack_bits(bytes: &[u8], width: u8, len: usize) -> Vec<u16> {
    (0..len)
        .map(|i| {
            (0..usize::from(width)).fold(0u16, |acc, b| {
                let bit = i * usize::from(width) + b;
                acc | (u16::from(bytes[bit / 8] >> (bit % 8) & 1) << b)
            })
        })
        .collect()
}

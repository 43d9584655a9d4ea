use alloc::vec;
use alloc::vec::Vec;

use crate::{CausalVerdict, Error};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LamportEvent {
    Local,
    Send,
    Recv(LamportClock),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LamportClock(pub u64);

impl LamportClock {
    pub fn step(self, event: LamportEvent) -> Self {
        match event {
            LamportEvent::Local | LamportEvent::Send => Self(self.0 + 1),
            LamportEvent::Recv(peer) => Self(self.0.max(peer.0) + 1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VcEvent<'a> {
    Local,
    Send,
    Recv(&'a VectorClock),
}

/// One counter per process in a system of fixed size.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VectorClock {
    entries: Vec<u64>,
}

impl VectorClock {
    pub fn new(size: usize) -> Self {
        Self { entries: vec![0; size] }
    }

    pub fn from_entries(entries: Vec<u64>) -> Self {
        Self { entries }
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn step(&self, index: usize, event: VcEvent<'_>) -> Result<Self, Error> {
        if index >= self.entries.len() {
            return Err(Error::IndexOutOfRange { index, size: self.entries.len() });
        }
        let mut next = self.clone();
        if let VcEvent::Recv(peer) = event {
            if peer.size() != self.size() {
                return Err(Error::LengthMismatch(self.size(), peer.size()));
            }
            for (a, b) in next.entries.iter_mut().zip(&peer.entries) {
                *a = (*a).max(*b);
            }
        }
        next.entries[index] += 1;
        Ok(next)
    }

    /// Component-wise partial order; equal clocks give `AfterOrEqual`.
    pub fn compare(&self, other: &Self) -> Result<CausalVerdict, Error> {
        if self.size() != other.size() {
            return Err(Error::LengthMismatch(self.size(), other.size()));
        }
        let ge = self.entries.iter().zip(&other.entries).all(|(a, b)| a >= b);
        let le = self.entries.iter().zip(&other.entries).all(|(a, b)| a <= b);
        Ok(match (ge, le) {
            (true, true) => CausalVerdict::AfterOrEqual,
            (true, false) => CausalVerdict::StrictlyAfter,
            (false, true) => CausalVerdict::StrictlyBefore,
            (false, false) => CausalVerdict::Concurrent,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lamport_rules() {
        assert_eq!(LamportClock(5).step(LamportEvent::Local), LamportClock(6));
        assert_eq!(LamportClock(5).step(LamportEvent::Send), LamportClock(6));
        assert_eq!(LamportClock(5).step(LamportEvent::Recv(LamportClock(9))), LamportClock(10));
        assert_eq!(LamportClock(9).step(LamportEvent::Recv(LamportClock(5))), LamportClock(10));
    }

    #[test]
    fn vector_rules() {
        let v = VectorClock::from_entries(vec![2, 0, 1]);
        let peer = VectorClock::from_entries(vec![0, 4, 3]);
        assert_eq!(v.step(0, VcEvent::Local).unwrap().entries(), [3, 0, 1]);
        assert_eq!(v.step(1, VcEvent::Recv(&peer)).unwrap().entries(), [2, 5, 3]);
        assert_eq!(v.step(3, VcEvent::Local), Err(Error::IndexOutOfRange { index: 3, size: 3 }));
        assert_eq!(v.compare(&v).unwrap(), CausalVerdict::AfterOrEqual);
        assert_eq!(v.compare(&peer).unwrap(), CausalVerdict::Concurrent);
        assert_eq!(VectorClock::new(2).compare(&v), Err(Error::LengthMismatch(2, 3)));
    }

    /// A mutates the genesis object, B learns of A's object and then
    /// mutates the genesis object too. B's object derives only from genesis,
    /// but its clock claims A's object as an ancestor.
    #[test]
    fn object_granularity_false_positive() {
        let a = VectorClock::new(2).step(0, VcEvent::Local).unwrap();
        assert_eq!(a.entries(), [1, 0]);
        let b = VectorClock::new(2).step(1, VcEvent::Recv(&a)).unwrap();
        assert_eq!(b.entries(), [1, 1]);
        let b2 = b.step(1, VcEvent::Local).unwrap();
        assert_eq!(b2.entries(), [1, 2]);
        assert_eq!(a.compare(&b2).unwrap(), CausalVerdict::StrictlyBefore);
    }
}

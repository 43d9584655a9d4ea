//! Decaying onion Bloom clocks (DOBC) and friends.
//!
//! The crate is `no_std` and only needs `alloc`. It contains:
//!
//! * [`vbf`], [`bloom`] and [`dobc`]: variable-bit counting filters, the plain
//!   counting Bloom clock and the layered, decaying clock built from them.
//! * [`lab`]: a ground-truth derivation DAG, Lamport and vector clocks,
//!   workload generation and accuracy measurement.
//! * [`object`]: the create/mutate object algebra tying states to clocks.
//! * [`proof`]: a pluggable proof backend with a transcript re-execution
//!   reference implementation.
//! * [`kstore`]: a deterministic discrete-event simulation of an eventually
//!   consistent key-value store built on the above.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bloom;
pub mod codec;
pub mod dobc;
mod error;
pub mod hash;
pub mod kstore;
pub mod lab;
pub mod object;
pub mod proof;
pub mod vbf;
pub mod verdict;

pub use bloom::BloomClock;
pub use error::Error;
pub use dobc::{CapacityReport, DecayMode, Dobc, DobcConfig, MergeStrategy, Slot};
pub use hash::{Digest, HashConfig};
pub use vbf::Vbf;
pub use verdict::CausalVerdict;

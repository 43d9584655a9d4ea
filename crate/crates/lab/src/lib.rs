//! Experiments, scenario files and CSV output on top of `dobc-core`.
//!
//! The `dobc` binary is a thin shell over [`experiments`]; the acceptance
//! suite calls the same functions directly.

pub mod experiments;
pub mod scenario;

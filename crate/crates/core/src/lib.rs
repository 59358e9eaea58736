//! Scheduling core for URLLC packets overlaid on pre-scheduled eMBB traffic
//! in a single-cell downlink.
//!
//! The pipeline per URLLC mini-slot is: pair arrived URLLC requests with eMBB
//! resource-block owners by deferred acceptance ([`matching`]), look up the
//! contract item for each request's willingness tier ([`contract`]), gate the
//! pair between superposition and puncturing, then allocate the minimal URLLC
//! power meeting the finite-blocklength rate target ([`scheduler`]).
//!
//! Everything here is allocation-only (`alloc`) and deterministic given seeds;
//! file formats, the CLI and the experiment sweep live in the `coexist-sim`
//! companion crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod contract;
mod error;
pub mod frame;
pub mod matching;
pub mod oracle;
pub mod phy;
pub mod scheduler;

pub use error::{Error, Result};

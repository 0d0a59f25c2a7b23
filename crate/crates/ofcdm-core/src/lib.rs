//! # ofcdm-core
//!
//! Link-level model of a multiuser OFCDM uplink with interleaved subcarrier
//! grouping and a receiver-centric probing/admission protocol.
//!
//! The crate is organized around one OFCDM frame: a grid of `M` subcarriers by
//! `N` chip intervals carrying one BPSK bit per data user, spread by a 2D
//! pseudonoise code over the user's subcarrier group. Admission runs in two
//! phases: a candidate sender first emits a one-chip-column probing tone on its
//! personal identifier cell, the receiver measures fading and prospective
//! interference on every group, grants the SINR-maximizing group, and the
//! sender then transmits its burst there.
//!
//! Modules:
//! - [`config`]: scenario parameters and validation
//! - [`grouping`]: interleaved subcarrier groups and probe identifiers
//! - [`channel`]: per-frame Rayleigh fading and receiver noise
//! - [`phy`]: spreading codes, frame composition, despreading, power/SINR chain
//! - [`protocol`]: the two-phase admission state machine and traffic model
//! - [`metrics`]: BER estimation and outage-probability analysis
//! - [`rng`]: counter-based seeded streams for reproducible Monte Carlo
//!
//! The crate is `no_std`-compatible (requires `alloc`); the `std` feature only
//! adds `std::error::Error` impls for the error types.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod channel;
pub mod config;
pub mod grouping;
pub mod metrics;
pub mod phy;
pub mod protocol;
pub mod rng;

pub use config::SystemConfig;
pub use protocol::{SimMode, Simulation};

//! Single-electron charge-qubit dynamics in a singly-ionized double-donor
//! structure driven by two strongly detuned, phase-locked optical pulses.
//!
//! The crate is organised bottom-up:
//!
//! - [`spectrum`]: the stationary level structure (two localized qubit states
//!   plus a manifold of delocalized transport states).
//! - [`drive`]: pulse envelopes, the two-pulse field, Rabi couplings,
//!   two-photon resonance and regime classification.
//! - [`dynamics`]: numerical propagation of the multi-level amplitudes in the
//!   bare, rotating-wave and detuning-averaged pictures.
//! - [`effective`]: the adiabatically eliminated two-level model, its dressed
//!   states and the analytic evolution matrix.
//! - [`gates`]: NOT / PHASE / Hadamard synthesis, STIRAP scheduling, fidelity
//!   and polarization leakage.
//!
//! Units: energies in µeV, time in ns, fields in V/cm, dipoles in e·nm.
//! Energies are divided by [`units::HBAR`] wherever they enter a phase.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod drive;
pub mod dynamics;
pub mod effective;
pub mod error;
pub mod gates;
pub mod linalg;
pub mod quad;
pub mod spectrum;
pub mod units;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

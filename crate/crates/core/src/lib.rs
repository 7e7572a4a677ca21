//! Collapse and revival of two-photon polarization entanglement when one
//! photon crosses a non-Markovian dephasing channel made of a Fabry-Perot
//! etalon followed by a birefringent delay.
//!
//! The pipeline runs from a discrete spectral model ([`spectrum`]) to the
//! decoherence kernel κ, the resulting two-photon states ([`channels`]),
//! their concurrence and sudden-death / revival structure ([`entanglement`]),
//! and simulated measurements: coincidence tomography ([`tomography`]) and
//! CHSH tests ([`bell`]). [`harness`] wires these into configurable scenarios.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bell;
pub mod channels;
pub mod entanglement;
pub mod error;
pub mod harness;
pub mod qcore;
pub mod spectrum;
pub mod tomography;

pub use error::{Error, Result};

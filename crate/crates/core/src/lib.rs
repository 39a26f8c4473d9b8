//! Simulation toolkit for two-party communication when the parties share
//! only ρ-correlated randomness.
//!
//! The crate is organised by protocol family:
//!
//! * [`mathcore`]: entropy, Hamming distance, packed bit vectors and Fourier
//!   analysis of real functions on the biased hypercube.
//! * [`randsource`]: counter-based, seed-addressed correlated randomness.
//! * [`compress`]: compression when sender and receiver hold different priors.
//! * [`agree`]: agreement distillation through random parity syndromes.
//! * [`gapip`]: gap inner-product instances, samplers and protocols.
//! * [`strategies`]: strategy trees, strategy vectors and the inner-product
//!   form of acceptance probability.
//! * [`harness`]: experiment configuration, the trial engine and emitters.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agree;
pub mod compress;
pub mod error;
pub mod gapip;
pub mod harness;
pub mod mathcore;
pub mod randsource;
pub mod strategies;

pub use error::{Error, Result};
pub use mathcore::Bits;
pub use randsource::{CorrelatedSource, Party};

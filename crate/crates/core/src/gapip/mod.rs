//! Gap inner-product instances, their samplers and two protocols: a
//! Gaussian projection protocol that tolerates imperfectly shared
//! randomness, and a sparse one-way protocol that needs it perfectly
//! shared. Also an equality test built on the Gaussian protocol.
//!
//! Both protocols have Alice send the bucket `m` of her squared norm:
//! `‖x‖² ∈ ((m−1)·u, m·u]` with `u = (c−s)n/100`, and `m = 0` only for
//! `x = 0`. Bob rejects outright when `m < 100c/(c−s)`.

mod code;
mod dist;
mod equality;
mod experiment;
mod gaussian;
mod instance;
mod sparse;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use code::{ConcatenatedCode, INNER_DISTANCE, INNER_LENGTH};
pub use dist::{sample_mixed, sample_yes_prime, PairDistribution, PairKind};
pub use equality::{equality_demo, EqualityParams, EqualityReport};
pub use experiment::{
    gaussian_amplified_trials, gaussian_trials, sample_instance, sparse_repeated_trials, sparse_trials,
    InstanceClass, TrialRecord,
};
pub use gaussian::{
    calibrate_threshold, gaussian_isr_amplified, gaussian_isr_protocol, gaussian_isr_with_addresses,
    AmplifiedReport, Backend, Calibration, GaussianParams, ThresholdMode, DEFAULT_ALPHA,
};
pub use instance::{classify, cmp_int_with_scaled, label_for, parse_instance, read_instance, GapIpInstance, Label};
pub use sparse::{sparse_psr_oneway, sparse_psr_repeated, RepeatedReport, SparseParams};

const SNAP: f64 = 1e-9;

/// Outcome of one protocol run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub accept: bool,
    /// 1-based index sent by Alice; 0 encodes the escape message.
    pub ell: usize,
    pub m: u64,
    pub bits_sent: usize,
    /// Bob's test statistic when he got far enough to compute one.
    pub statistic: Option<f64>,
    /// Threshold the statistic was compared with.
    pub threshold: Option<f64>,
}

/// The thresholds `c > s > 0` of a gap instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub c: f64,
    pub s: f64,
}

impl Gap {
    pub fn new(c: f64, s: f64) -> Result<Self> {
        if !(c.is_finite() && s > 0.0 && c > s && c <= 1.0) {
            return Err(Error::Infeasible(format!("need 0 < s < c <= 1, got c = {c}, s = {s}")));
        }
        Ok(Gap { c, s })
    }

    /// `c = 0.9/q`, `s = 0.6/q`.
    pub fn for_q(q: f64) -> Result<Self> {
        if !(q >= 1.0) || !q.is_finite() {
            return Err(Error::OutOfDomain {
                name: "q",
                value: q,
                range: "[1, inf)",
            });
        }
        Self::new(0.9 / q, 0.6 / q)
    }

    /// Bucket of a squared norm: `m = ⌈100·‖x‖²/((c−s)n)⌉`, with quotients
    /// within 1e−9 of an integer snapped to it.
    pub fn bucket(&self, norm: usize, n: usize) -> u64 {
        if norm == 0 || n == 0 {
            return 0;
        }
        snap_ceil(100.0 * norm as f64 / ((self.c - self.s) * n as f64))
    }

    /// `100c/(c−s)`.
    pub fn m_floor(&self) -> f64 {
        100.0 * self.c / (self.c - self.s)
    }

    pub fn passes_floor(&self, m: u64) -> bool {
        m as f64 >= self.m_floor() - SNAP
    }

    /// Largest possible bucket, reached at `‖x‖² = n`.
    pub fn m_max(&self) -> u64 {
        snap_ceil(100.0 / (self.c - self.s))
    }

    /// Largest bucket for `‖x‖² ≤ n/q`.
    pub fn sparse_m_max(&self, q: f64) -> u64 {
        snap_ceil(100.0 / (q * (self.c - self.s)))
    }
}

fn snap_ceil(v: f64) -> u64 {
    let r = v.round();
    if (v - r).abs() <= SNAP * v.abs().max(1.0) {
        r as u64
    } else {
        v.ceil() as u64
    }
}

/// `⌈log₂ count⌉`, the bits needed to name one of `count` values.
pub fn bits_for(count: u64) -> usize {
    if count <= 1 {
        0
    } else {
        (64 - (count - 1).leading_zeros()) as usize
    }
}

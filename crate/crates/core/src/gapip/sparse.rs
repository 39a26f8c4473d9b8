//! One-way protocol for sparse instances with perfectly shared randomness.
//!
//! The parties share indices `i₁, i₂, …, i_t`. Alice sends the smallest `ℓ`
//! with `x_{i_ℓ} = 1` and her bucket `m`, or `(0, 0)` when there is none.
//! Bob answers `y_{i_ℓ}`, or 0 on the escape message or a bucket below the
//! floor. One atomic run accepts with probability close to
//! `⟨x,y⟩/‖x‖²`; repeating and thresholding the count separates the
//! classes.

use serde::{Deserialize, Serialize};

use super::{bits_for, Gap, ProtocolReport};
use crate::error::{Error, Result};
use crate::mathcore::Bits;
use crate::randsource::CorrelatedSource;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparseParams {
    pub gap: Gap,
    /// Sparsity parameter: instances satisfy `‖x‖² ≤ n/q`.
    pub q: f64,
    /// `(c−s)/(3c)`.
    pub gamma: f64,
    /// Shared indices per atomic run.
    pub t: usize,
}

impl SparseParams {
    /// `t = ⌈ln(1/γ)/(−ln(1−c))⌉`, clamped to `[1, 64·⌈1/c⌉]`.
    pub fn new(gap: Gap, q: f64) -> Result<Self> {
        if !(q >= 1.0) || !q.is_finite() {
            return Err(Error::OutOfDomain {
                name: "q",
                value: q,
                range: "[1, inf)",
            });
        }
        let Gap { c, s } = gap;
        let gamma = (c - s) / (3.0 * c);
        let raw = (1.0 / gamma).ln() / -(1.0 - c).ln();
        let cap = 64 * (1.0 / c).ceil() as usize;
        let t = if raw.is_finite() { (raw - 1e-9).ceil().max(1.0) as usize } else { 1 };
        Ok(SparseParams {
            gap,
            q,
            gamma,
            t: t.clamp(1, cap),
        })
    }

    /// `c = 0.9/q`, `s = 0.6/q`.
    pub fn for_q(q: f64) -> Result<Self> {
        Self::new(Gap::for_q(q)?, q)
    }

    /// `⌈log₂(t+1)⌉ + ⌈log₂(m_max+1)⌉`.
    pub fn bits_sent(&self) -> usize {
        bits_for(self.t as u64 + 1) + bits_for(self.gap.m_max() + 1)
    }

    /// Lower bound `(1−γ)·(c/(c−s))·(100/m)` on atomic acceptance of yes-instances.
    pub fn yes_bound(&self, m: u64) -> f64 {
        let Gap { c, s } = self.gap;
        (1.0 - self.gamma) * (c / (c - s)) * (100.0 / m as f64)
    }

    /// Upper bound `(s/(c−s))·(100/(m−1))` on atomic acceptance of no-instances.
    pub fn no_bound(&self, m: u64) -> f64 {
        let Gap { c, s } = self.gap;
        (s / (c - s)) * (100.0 / (m as f64 - 1.0))
    }

    pub fn midpoint(&self, m: u64) -> f64 {
        0.5 * (self.yes_bound(m) + self.no_bound(m))
    }

    /// `⌈9·m²⌉` at the largest bucket allowed by sparsity.
    pub fn default_reps(&self) -> u64 {
        let m = self.gap.sparse_m_max(self.q);
        9 * m * m
    }
}

fn atomic(x: &Bits, y: &Bits, indices: impl Iterator<Item = usize>, params: &SparseParams) -> ProtocolReport {
    let m = params.gap.bucket(x.count_ones(), x.len());
    let mut report = ProtocolReport {
        accept: false,
        ell: 0,
        m: 0,
        bits_sent: params.bits_sent(),
        statistic: None,
        threshold: None,
    };
    if let Some((pos, i)) = indices.take(params.t).enumerate().find(|&(_, i)| x.get(i)) {
        report.ell = pos + 1;
        report.m = m;
        report.accept = params.gap.passes_floor(m) && y.get(i);
    }
    report
}

/// One atomic run on explicit shared indices (only the first `t` are read).
pub fn sparse_psr_oneway(x: &Bits, y: &Bits, indices: &[usize], params: &SparseParams) -> Result<ProtocolReport> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if let Some(&i) = indices.iter().find(|&&i| i >= x.len()) {
        return Err(Error::CoordinateOutOfRange { index: i, n: x.len() });
    }
    Ok(atomic(x, y, indices.iter().copied(), params))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepeatedReport {
    pub accept: bool,
    pub count: u64,
    pub reps: u64,
    pub m: u64,
    /// Acceptance needs `count ≥ threshold`.
    pub threshold: f64,
}

/// `reps` atomic runs on shared index streams `0..reps`; accepts iff the
/// number of atomic accepts reaches `reps` times the midpoint of the two
/// bounds at Alice's bucket.
pub fn sparse_psr_repeated(
    x: &Bits,
    y: &Bits,
    src: &CorrelatedSource,
    params: &SparseParams,
    reps: u64,
) -> Result<RepeatedReport> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if reps == 0 {
        return Err(Error::OutOfDomain {
            name: "reps",
            value: 0.0,
            range: ">= 1",
        });
    }
    let m = params.gap.bucket(x.count_ones(), x.len());
    let mut count = 0;
    for r in 0..reps {
        count += atomic(x, y, src.shared_index_iter(r, x.len())?, params).accept as u64;
    }
    let threshold = if params.gap.passes_floor(m) {
        reps as f64 * params.midpoint(m)
    } else {
        f64::INFINITY
    };
    Ok(RepeatedReport {
        accept: count as f64 >= threshold,
        count,
        reps,
        m,
        threshold,
    })
}

//! Per-trial drivers over sampled instances, shared by the command-line
//! runner and the acceptance tests.

use serde::{Deserialize, Serialize};

use super::{
    classify, gaussian_isr_amplified, gaussian_isr_protocol, sparse_psr_oneway, sparse_psr_repeated, GaussianParams,
    Label, PairDistribution, SparseParams,
};
use crate::error::Result;
use crate::harness::try_run_trials;
use crate::mathcore::Bits;
use crate::randsource::{CorrelatedSource, Party};

/// Which product distribution an instance is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceClass {
    /// `B_Y^{⊗n}`.
    Yes,
    /// `B_N^{⊗n}`.
    No,
}

impl InstanceClass {
    pub fn name(self) -> &'static str {
        match self {
            InstanceClass::Yes => "yes",
            InstanceClass::No => "no",
        }
    }
}

pub fn sample_instance(class: InstanceClass, q: f64, n: usize, seed: u64) -> Result<(Bits, Bits)> {
    let d = match class {
        InstanceClass::Yes => PairDistribution::yes(q)?,
        InstanceClass::No => PairDistribution::no(q)?,
    };
    Ok(d.sample(n, seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub class: InstanceClass,
    /// Exact label of the sampled instance.
    pub label: Label,
    pub sparse_ok: bool,
    pub accept: bool,
    pub ell: usize,
    pub m: u64,
    pub bits_sent: usize,
    /// Accepting repetitions, for repeated protocols.
    pub count: u64,
}

#[allow(clippy::too_many_arguments)]
fn trials_with<F>(class: InstanceClass, q: f64, n: usize, c: f64, s: f64, trials: u64, seed: u64, run: F) -> Result<Vec<TrialRecord>>
where
    F: Fn(&Bits, &Bits, u64) -> Result<TrialRecord> + Sync + Send,
{
    try_run_trials(seed, trials, |_, ts| {
        let (x, y) = sample_instance(class, q, n, ts)?;
        let (label, sparse_ok) = classify(&x, &y, q, c, s)?;
        let mut rec = run(&x, &y, ts)?;
        rec.class = class;
        rec.label = label;
        rec.sparse_ok = sparse_ok;
        Ok(rec)
    })
}

fn blank(accept: bool, ell: usize, m: u64, bits_sent: usize, count: u64) -> TrialRecord {
    TrialRecord {
        class: InstanceClass::Yes,
        label: Label::Neither,
        sparse_ok: false,
        accept,
        ell,
        m,
        bits_sent,
        count,
    }
}

/// Single-shot Gaussian protocol on fresh instances of one class.
#[allow(clippy::too_many_arguments)]
pub fn gaussian_trials(
    class: InstanceClass,
    q: f64,
    n: usize,
    rho: f64,
    params: &GaussianParams,
    trials: u64,
    seed: u64,
) -> Result<Vec<TrialRecord>> {
    CorrelatedSource::new(seed, rho, Party::A)?;
    trials_with(class, q, n, params.gap.c, params.gap.s, trials, seed, |x, y, ts| {
        let src = CorrelatedSource::new(ts, rho, Party::A)?;
        let r = gaussian_isr_protocol(x, y, &src, params)?;
        Ok(blank(r.accept, r.ell, r.m, r.bits_sent, r.accept as u64))
    })
}

/// Majority-of-`reps` Gaussian protocol on fresh instances of one class.
#[allow(clippy::too_many_arguments)]
pub fn gaussian_amplified_trials(
    class: InstanceClass,
    q: f64,
    n: usize,
    rho: f64,
    params: &GaussianParams,
    reps: usize,
    trials: u64,
    seed: u64,
) -> Result<Vec<TrialRecord>> {
    CorrelatedSource::new(seed, rho, Party::A)?;
    trials_with(class, q, n, params.gap.c, params.gap.s, trials, seed, |x, y, ts| {
        let src = CorrelatedSource::new(ts, rho, Party::A)?;
        let r = gaussian_isr_amplified(x, y, &src, params, reps)?;
        let m = params.gap.bucket(x.count_ones(), x.len());
        Ok(blank(r.accept, 0, m, r.bits_sent, r.accepts as u64))
    })
}

/// Atomic sparse protocol on fresh instances of one class.
pub fn sparse_trials(class: InstanceClass, n: usize, params: &SparseParams, trials: u64, seed: u64) -> Result<Vec<TrialRecord>> {
    trials_with(class, params.q, n, params.gap.c, params.gap.s, trials, seed, |x, y, ts| {
        let src = CorrelatedSource::new(ts, 1.0, Party::A)?;
        let idx = src.shared_indices(0, params.t, n)?;
        let r = sparse_psr_oneway(x, y, &idx, params)?;
        Ok(blank(r.accept, r.ell, r.m, r.bits_sent, r.accept as u64))
    })
}

/// Repeated sparse protocol on fresh instances of one class.
pub fn sparse_repeated_trials(
    class: InstanceClass,
    n: usize,
    params: &SparseParams,
    reps: u64,
    trials: u64,
    seed: u64,
) -> Result<Vec<TrialRecord>> {
    trials_with(class, params.q, n, params.gap.c, params.gap.s, trials, seed, |x, y, ts| {
        let src = CorrelatedSource::new(ts, 1.0, Party::A)?;
        let r = sparse_psr_repeated(x, y, &src, params, reps)?;
        Ok(blank(r.accept, 0, r.m, params.bits_sent() * reps as usize, r.count))
    })
}

//! Compression when sender and receiver disagree about the prior.
//!
//! Alice knows `m ∼ P` and sends the prefix of length `j(m)` of her
//! dictionary word `w_m`. Bob holds a ρ-correlated copy of the dictionary
//! and a prior `Q` close to `P`; he keeps the messages whose noisy word is
//! within relative distance `μ + ε′` of what he received and outputs the
//! one with largest `Q`.

use std::path::Path;

use log::warn;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{run_trials, Moments, Proportion};
use crate::mathcore::{binary_entropy, entropy_bits, inverse_entropy_lower, Bits};
use crate::randsource::{CorrelatedSource, CounterRng};

const NORMALISATION_TOL: f64 = 1e-9;
/// Slack used when rounding real-valued lengths up, so that values equal to
/// an integer up to float noise are not pushed to the next integer.
const CEIL_SLACK: f64 = 1e-9;
const MESSAGE_TAG: u64 = 0xC0;

/// A probability vector over messages `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVec {
    probs: Vec<f64>,
    entropy: f64,
    cdf: Vec<f64>,
    // Messages by decreasing probability, ties by index.
    order: Vec<u32>,
}

impl ProbVec {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty probability vector".into()));
        }
        if probs.len() > u32::MAX as usize {
            return Err(Error::InvalidDistribution("too many messages".into()));
        }
        if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidDistribution(format!("entry {i} is {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALISATION_TOL {
            return Err(Error::InvalidDistribution(format!("entries sum to {total}")));
        }
        let entropy = entropy_bits(&probs);
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        let mut order: Vec<u32> = (0..probs.len() as u32).collect();
        order.sort_by(|&a, &b| probs[b as usize].total_cmp(&probs[a as usize]).then(a.cmp(&b)));
        Ok(ProbVec {
            probs,
            entropy,
            cdf,
            order,
        })
    }

    /// Normalises nonnegative weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidDistribution(format!("weights sum to {total}")));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0 / n.max(1) as f64; n])
    }

    /// `P(i) ∝ ratio^i` on `0..n`.
    pub fn geometric_truncated(n: usize, ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio <= 1.0) {
            return Err(Error::OutOfDomain {
                name: "ratio",
                value: ratio,
                range: "(0, 1]",
            });
        }
        let weights: Vec<f64> = (0..n).map(|i| ratio.powi(i as i32)).collect();
        Self::from_weights(&weights)
    }

    /// Truncated geometric on `0..n` whose entropy is `target` bits (to 1e−9).
    pub fn geometric_with_entropy(n: usize, target: f64) -> Result<Self> {
        let max = (n as f64).log2();
        if !(target > 0.0 && target < max) {
            return Err(Error::OutOfDomain {
                name: "entropy target",
                value: target,
                range: "(0, log2 n)",
            });
        }
        // Entropy increases with the ratio.
        let (mut lo, mut hi) = (1e-12, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if Self::geometric_truncated(n, mid)?.entropy() < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        Self::geometric_truncated(n, 0.5 * (lo + hi))
    }

    /// Parses a JSON array of numbers, or numbers separated by whitespace
    /// or commas.
    pub fn parse(text: &str) -> Result<Self> {
        let trimmed = text.trim();
        let probs: Vec<f64> = if trimmed.starts_with('[') {
            serde_json::from_str(trimmed)?
        } else {
            trimmed
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}"))))
                .collect::<Result<_>>()?
        };
        Self::new(probs)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, m: usize) -> f64 {
        self.probs[m]
    }

    /// Entropy in bits.
    pub fn entropy(&self) -> f64 {
        self.entropy
    }

    /// Messages ordered by decreasing probability, ties by index.
    pub fn order(&self) -> impl Iterator<Item = usize> + '_ {
        self.order.iter().map(|&i| i as usize)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random::<f64>() * self.cdf[self.cdf.len() - 1];
        let i = self.cdf.partition_point(|&c| c <= u);
        // Never land on a zero-probability entry because of rounding.
        let mut i = i.min(self.probs.len() - 1);
        while self.probs[i] == 0.0 && i > 0 {
            i -= 1;
        }
        i
    }

    /// A prior `Q` with `max_i |log₂(P_i/Q_i)| ≤ gap`: each entry is scaled
    /// by `2^u` with `u` uniform in `[−gap/2, gap/2]`, then renormalised.
    pub fn perturbed(&self, gap: f64, seed: u64) -> Result<Self> {
        if !(gap >= 0.0) || !gap.is_finite() {
            return Err(Error::OutOfDomain {
                name: "gap",
                value: gap,
                range: "[0, inf)",
            });
        }
        let mut rng = CounterRng::new(seed);
        let w: Vec<f64> = self
            .probs
            .iter()
            .map(|&p| p * (gap * (rng.random::<f64>() - 0.5)).exp2())
            .collect();
        Self::from_weights(&w)
    }
}

/// `max_i |log₂(P_i/Q_i)|` over entries where either is positive; infinite
/// when the supports differ.
pub fn promise_gap(p: &ProbVec, q: &ProbVec) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    let mut gap: f64 = 0.0;
    for (&a, &b) in p.probs.iter().zip(&q.probs) {
        if a == 0.0 && b == 0.0 {
            continue;
        }
        if a == 0.0 || b == 0.0 {
            return Ok(f64::INFINITY);
        }
        gap = gap.max((a / b).log2().abs());
    }
    Ok(gap)
}

/// Solves `1/(1 − h(μ+ε′)) = (1+ε)/(1 − h(μ))` for `ε′ > 0`.
pub fn solve_epsilon_prime(eps: f64, mu: f64) -> Result<f64> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::OutOfDomain {
            name: "eps",
            value: eps,
            range: "(0, inf)",
        });
    }
    if !(0.0..0.5).contains(&mu) {
        return Err(Error::Infeasible(format!(
            "flip probability {mu} leaves no capacity (need mu < 1/2)"
        )));
    }
    let target = 1.0 - (1.0 - binary_entropy(mu)?) / (1.0 + eps);
    if target >= 1.0 {
        return Err(Error::Infeasible(format!("eps = {eps} needs h(mu + eps') >= 1")));
    }
    let x = inverse_entropy_lower(target, mu);
    let eps_prime = x - mu;
    if !(eps_prime > 0.0) {
        return Err(Error::Infeasible(format!("eps = {eps} too small to resolve at mu = {mu}")));
    }
    Ok(eps_prime)
}

/// Protocol parameters together with the derived `μ`, `ε′` and `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressParams {
    pub rho: f64,
    pub eps: f64,
    pub delta: f64,
    /// Promise `max |log₂(P_i/Q_i)| ≤ prior_gap`.
    pub prior_gap: f64,
    /// Multiplier in `c = ⌈(κ/ε′²) ln(2/δ)⌉`.
    pub kappa: f64,
    mu: f64,
    eps_prime: f64,
    c: usize,
}

pub const DEFAULT_KAPPA: f64 = 3.0;

impl CompressParams {
    pub fn new(rho: f64, eps: f64, delta: f64, prior_gap: f64) -> Result<Self> {
        Self::with_kappa(rho, eps, delta, prior_gap, DEFAULT_KAPPA)
    }

    pub fn with_kappa(rho: f64, eps: f64, delta: f64, prior_gap: f64, kappa: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::OutOfDomain {
                name: "rho",
                value: rho,
                range: "[0, 1]",
            });
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::OutOfDomain {
                name: "delta",
                value: delta,
                range: "(0, 1)",
            });
        }
        if !(prior_gap >= 0.0) || !prior_gap.is_finite() {
            return Err(Error::OutOfDomain {
                name: "prior_gap",
                value: prior_gap,
                range: "[0, inf)",
            });
        }
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::OutOfDomain {
                name: "kappa",
                value: kappa,
                range: "(0, inf)",
            });
        }
        let mu = (1.0 - rho) / 2.0;
        let eps_prime = solve_epsilon_prime(eps, mu)?;
        let c = (kappa / (eps_prime * eps_prime) * (2.0 / delta).ln() - CEIL_SLACK).ceil();
        if !(c.is_finite() && c < 1e9) {
            return Err(Error::Infeasible(format!("word length floor c = {c} is impractical")));
        }
        Ok(CompressParams {
            rho,
            eps,
            delta,
            prior_gap,
            kappa,
            mu,
            eps_prime,
            c: (c as usize).max(1),
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn eps_prime(&self) -> f64 {
        self.eps_prime
    }

    /// Minimum word length `c`.
    pub fn c(&self) -> usize {
        self.c
    }

    /// `(1+ε)/(1−h(μ))`.
    pub fn rate_factor(&self) -> f64 {
        (1.0 + self.eps) / (1.0 - binary_entropy(self.mu).unwrap_or(1.0))
    }

    /// Word length for a message of probability `p`:
    /// `max{c, ⌈(1+ε)/(1−h(μ))·(log₂(1/p) + 2Δ + log₂(1/δ))⌉}`.
    pub fn word_length(&self, p: f64) -> Result<usize> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::OutOfDomain {
                name: "message probability",
                value: p,
                range: "(0, 1]",
            });
        }
        let real = self.rate_factor() * (-p.log2() + 2.0 * self.prior_gap - self.delta.log2());
        let j = (real - CEIL_SLACK).ceil().max(1.0);
        Ok((j as usize).max(self.c))
    }

    /// Largest accepted Hamming distance for a word of length `j`.
    pub fn radius(&self, j: usize) -> usize {
        ((self.mu + self.eps_prime) * j as f64 + CEIL_SLACK).floor() as usize
    }

    /// `(1+ε)/(1−h(μ))·(H(P) + 2Δ + c)`.
    pub fn length_bound(&self, entropy: f64) -> f64 {
        self.rate_factor() * (entropy + 2.0 * self.prior_gap + self.c as f64)
    }
}

/// Alice's word for message `m`.
pub fn encode(p: &ProbVec, m: usize, params: &CompressParams, src: &CorrelatedSource) -> Result<Bits> {
    if m >= p.len() {
        return Err(Error::CoordinateOutOfRange { index: m, n: p.len() });
    }
    if p.prob(m) == 0.0 {
        return Err(Error::OutsideSupport(m));
    }
    let j = params.word_length(p.prob(m))?;
    src.dictionary_word(m as u64, j)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decoded {
    Message(usize),
    /// No dictionary word was close enough to the received one.
    Failure,
}

/// Whether `Bob's word for candidate` is within `radius` of `x`, reading the
/// candidate chunk by chunk and stopping once the radius is exceeded.
fn within_radius(src: &CorrelatedSource, candidate: u64, x: &Bits, radius: usize) -> bool {
    let j = x.len() as u64;
    let mut dist = 0usize;
    for (chunk, &w) in x.words().iter().enumerate() {
        dist += (src.dictionary_chunk(candidate, j, chunk as u64) ^ w).count_ones() as usize;
        if dist > radius {
            return false;
        }
    }
    true
}

/// Bob's decoder: the `Q`-maximiser among candidates whose word lies within
/// `(μ+ε′)·|X|` of `X`, ties to the smallest index.
///
/// Candidates are visited in decreasing `Q`, so the first survivor is the
/// answer; the result is the same as scanning all of them.
pub fn decode(q: &ProbVec, x: &Bits, params: &CompressParams, src: &CorrelatedSource) -> Result<Decoded> {
    if x.is_empty() {
        return Err(Error::OutOfDomain {
            name: "word length",
            value: 0.0,
            range: ">= 1",
        });
    }
    let radius = params.radius(x.len());
    Ok(q.order()
        .find(|&m| within_radius(src, m as u64, x, radius))
        .map_or(Decoded::Failure, Decoded::Message))
}

/// Messages whose noisy word is within the decoding radius of `x`, in index
/// order. Linear scan over the whole universe.
pub fn candidate_set(n: usize, x: &Bits, params: &CompressParams, src: &CorrelatedSource) -> Vec<usize> {
    let radius = params.radius(x.len());
    (0..n).filter(|&m| within_radius(src, m as u64, x, radius)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressReport {
    pub trials: u64,
    pub successes: u64,
    pub success: Proportion,
    /// Trials where no candidate survived.
    pub failures_empty: u64,
    /// Mean word length; zero when there are no trials.
    pub mean_length: f64,
    pub length_bound: f64,
    pub entropy: f64,
    pub c: usize,
    pub eps_prime: f64,
    pub promise_gap: f64,
}

#[derive(Debug, Clone, Copy)]
struct Trial {
    length: usize,
    outcome: Decoded,
    message: usize,
}

/// Samples `m ∼ P` for each trial, encodes with Alice's view and decodes
/// with Bob's view of the trial's tape.
pub fn run_compression_experiment(
    p: &ProbVec,
    q: &ProbVec,
    params: &CompressParams,
    trials: u64,
    seed: u64,
) -> Result<CompressReport> {
    let gap = promise_gap(p, q)?;
    if gap > params.prior_gap + 1e-12 {
        warn!(
            "priors violate the promise: max |log2(P/Q)| = {gap} > {}; no decoding guarantee",
            params.prior_gap
        );
    }
    let results: Vec<Trial> = run_trials(seed, trials, |_, s| -> Result<Trial> {
        let (alice, bob) = CorrelatedSource::pair(s, params.rho)?;
        let message = p.sample(&mut alice.aux_rng(MESSAGE_TAG, 0, 0));
        let x = encode(p, message, params, &alice)?;
        let outcome = decode(q, &x, params, &bob)?;
        Ok(Trial {
            length: x.len(),
            outcome,
            message,
        })
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let lengths: Moments = results.iter().map(|t| t.length as f64).collect();
    let successes = results
        .iter()
        .filter(|t| t.outcome == Decoded::Message(t.message))
        .count() as u64;
    Ok(CompressReport {
        trials,
        successes,
        success: Proportion::new(successes, trials),
        failures_empty: results.iter().filter(|t| t.outcome == Decoded::Failure).count() as u64,
        mean_length: lengths.mean(),
        length_bound: params.length_bound(p.entropy()),
        entropy: p.entropy(),
        c: params.c(),
        eps_prime: params.eps_prime(),
        promise_gap: gap,
    })
}

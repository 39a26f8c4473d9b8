//! Agreement distillation from ρ-correlated bits.
//!
//! Alice outputs her raw bits `r` and sends the syndrome `y = H·r` for a
//! public random `ℓ × k` parity-check matrix `H`. Bob looks for the unique
//! `r̃` with `H·r̃ = y` in the Hamming ball of radius `⌊(μ+ε)k⌋` around his
//! bits `r′` and falls back to `r′` when there is none or several.

use std::collections::BTreeMap;

use log::warn;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{run_trials, Proportion};
use crate::mathcore::{binary_entropy, Bits};
use crate::randsource::{derive_seed, mix64, CorrelatedSource, CounterRng, Party};

/// Widest supported block; rows are stored as `u64` masks.
pub const MAX_K: usize = 64;
const MATRIX_TAG: u64 = 0x5e_ed0f_4a71;
/// Certified matrices are searched among this many draws.
pub const DEFAULT_MATRIX_DRAWS: u64 = 64;

/// An `ℓ × k` matrix over GF(2).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParityMatrix {
    k: usize,
    rows: Vec<u64>,
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 || k > MAX_K {
        return Err(Error::OutOfDomain {
            name: "k",
            value: k as f64,
            range: "1..=64",
        });
    }
    Ok(())
}

fn low_mask(k: usize) -> u64 {
    if k == 64 {
        u64::MAX
    } else {
        (1u64 << k) - 1
    }
}

/// `ℓ = ⌈h(μ+ε)·k⌉`.
pub fn syndrome_length(k: usize, eps: f64, mu: f64) -> Result<usize> {
    check_slack(eps, mu)?;
    let real = binary_entropy(mu + eps)? * k as f64;
    Ok(((real - 1e-9).ceil().max(0.0) as usize).min(k))
}

/// Decoding radius `⌊(μ+ε)k⌋`.
pub fn decoding_radius(k: usize, eps: f64, mu: f64) -> usize {
    ((mu + eps) * k as f64 + 1e-9).floor() as usize
}

fn check_slack(eps: f64, mu: f64) -> Result<()> {
    if !(eps >= 0.0) || !(0.0..=0.5).contains(&mu) {
        return Err(Error::OutOfDomain {
            name: "eps",
            value: eps,
            range: "eps >= 0 with mu in [0, 1/2]",
        });
    }
    if mu + eps >= 0.5 {
        return Err(Error::Infeasible(format!(
            "mu + eps = {} must stay below 1/2",
            mu + eps
        )));
    }
    Ok(())
}

impl ParityMatrix {
    /// Rows given as masks over the low `k` bits; bit `j` of a row is entry `(i, j)`.
    pub fn from_rows(k: usize, rows: Vec<u64>) -> Result<Self> {
        check_k(k)?;
        if let Some(r) = rows.iter().find(|&&r| r & !low_mask(k) != 0) {
            return Err(Error::Parse(format!("row {r:#x} has bits beyond column {k}")));
        }
        Ok(ParityMatrix { k, rows })
    }

    /// Uniformly random `ℓ × k` matrix, deterministic in `seed`.
    pub fn random(seed: u64, ell: usize, k: usize) -> Result<Self> {
        check_k(k)?;
        let mut rng = CounterRng::new(mix64(seed ^ MATRIX_TAG));
        let rows = (0..ell).map(|_| rng.next_u64() & low_mask(k)).collect();
        Ok(ParityMatrix { k, rows })
    }

    pub fn zeros(ell: usize, k: usize) -> Result<Self> {
        Self::from_rows(k, vec![0; ell])
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn ell(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[u64] {
        &self.rows
    }

    /// No compression: at least as many syndrome bits as raw bits.
    pub fn is_degenerate(&self) -> bool {
        self.ell() >= self.k
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i] >> j & 1 == 1
    }

    /// `H·v` as an `ℓ`-bit mask.
    pub fn syndrome_mask(&self, v: u64) -> u64 {
        self.rows
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &row)| acc | (((row & v).count_ones() as u64 & 1) << i))
    }

    fn column_syndromes(&self) -> Vec<u64> {
        (0..self.k).map(|j| self.syndrome_mask(1 << j)).collect()
    }

    pub fn syndrome(&self, r: &Bits) -> Result<Bits> {
        if r.len() != self.k {
            return Err(Error::LengthMismatch {
                left: r.len(),
                right: self.k,
            });
        }
        Ok(Bits::from_u64(self.ell(), self.syndrome_mask(r.as_u64())))
    }
}

/// `ParityMatrix` with `ℓ = ⌈h(μ+ε)k⌉` uniform rows.
pub fn gen_matrix(seed: u64, k: usize, eps: f64, mu: f64) -> Result<ParityMatrix> {
    let ell = syndrome_length(k, eps, mu)?;
    let h = ParityMatrix::random(seed, ell, k)?;
    if h.is_degenerate() {
        warn!("syndrome length {ell} >= k = {k}: no compression");
    }
    Ok(h)
}

/// Exact probability that Bob recovers `r` when each of Alice's bits is
/// flipped independently with probability `mu`.
///
/// Bob succeeds exactly when the error pattern `e` lies in the ball and no
/// other pattern of the ball shares its syndrome; the result does not depend
/// on `r`.
pub fn success_probability(h: &ParityMatrix, mu: f64, radius: usize) -> f64 {
    let k = h.k;
    let cols = h.column_syndromes();
    let mut counts: BTreeMap<u64, (u32, f64)> = BTreeMap::new();
    for w in 0..=radius.min(k) {
        let weight_prob = mu.powi(w as i32) * (1.0 - mu).powi((k - w) as i32);
        for_each_pattern(k, w, |e| {
            let s = syndrome_of_pattern(&cols, e);
            let entry = counts.entry(s).or_insert((0, 0.0));
            entry.0 += 1;
            entry.1 += weight_prob;
            true
        });
    }
    counts.values().filter(|(n, _)| *n == 1).map(|(_, p)| p).sum()
}

/// Probability that more than `radius` of `k` bits flip.
pub fn outside_ball_probability(k: usize, mu: f64, radius: usize) -> f64 {
    let mut inside = 0.0;
    let mut binom = 1.0;
    for w in 0..=radius.min(k) {
        if w > 0 {
            binom *= (k - w + 1) as f64 / w as f64;
        }
        inside += binom * mu.powi(w as i32) * (1.0 - mu).powi((k - w) as i32);
    }
    (1.0 - inside).max(0.0)
}

/// Among up to `draws` random matrices with seeds derived from `seed`,
/// returns the first whose syndrome-collision loss
/// `P[e in ball] − P[success]` is at most `max_collision`, else the matrix
/// with the smallest loss. Also returns its exact success probability.
pub fn gen_certified_matrix(
    seed: u64,
    k: usize,
    eps: f64,
    mu: f64,
    max_collision: f64,
    draws: u64,
) -> Result<(ParityMatrix, f64)> {
    let radius = decoding_radius(k, eps, mu);
    let in_ball = 1.0 - outside_ball_probability(k, mu, radius);
    let mut best: Option<(ParityMatrix, f64)> = None;
    for attempt in 0..draws.max(1) {
        let h = gen_matrix(derive_seed(seed, attempt), k, eps, mu)?;
        let p = success_probability(&h, mu, radius);
        if in_ball - p <= max_collision {
            return Ok((h, p));
        }
        if best.as_ref().is_none_or(|(_, bp)| p > *bp) {
            best = Some((h, p));
        }
    }
    let (h, p) = best.expect("at least one draw");
    warn!(
        "no matrix among {draws} draws has collision loss <= {max_collision}; using loss {}",
        in_ball - p
    );
    Ok((h, p))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AliceMessage {
    pub w_a: Bits,
    pub syndrome: Bits,
}

pub fn alice_step(r: &Bits, h: &ParityMatrix) -> Result<AliceMessage> {
    Ok(AliceMessage {
        w_a: r.clone(),
        syndrome: h.syndrome(r)?,
    })
}

/// Calls `f` on every `k`-bit mask of weight `w` in increasing numeric
/// order (Gosper's hack); stops early when `f` returns `false`.
fn for_each_pattern(k: usize, w: usize, mut f: impl FnMut(u64) -> bool) {
    if w > k {
        return;
    }
    if w == 0 {
        f(0);
        return;
    }
    let limit = low_mask(k);
    let mut v: u64 = low_mask(w);
    loop {
        if !f(v) {
            return;
        }
        let c = v & v.wrapping_neg();
        let r = v.wrapping_add(c);
        if r == 0 {
            return;
        }
        v = (((r ^ v) >> 2) / c) | r;
        if v & !limit != 0 {
            return;
        }
    }
}

fn syndrome_of_pattern(cols: &[u64], e: u64) -> u64 {
    let mut s = 0;
    let mut m = e;
    while m != 0 {
        s ^= cols[m.trailing_zeros() as usize];
        m &= m - 1;
    }
    s
}

fn check_dims(r_prime: &Bits, y: &Bits, h: &ParityMatrix) -> Result<()> {
    if r_prime.len() != h.k {
        return Err(Error::LengthMismatch {
            left: r_prime.len(),
            right: h.k,
        });
    }
    if y.len() != h.ell() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: h.ell(),
        });
    }
    Ok(())
}

/// Collects the solutions `r̃ = r′ ⊕ e` with `wt(e) ≤ radius` and
/// `H·r̃ = y` in order of increasing weight, stopping after `limit` of them.
fn search(r_prime: &Bits, y: &Bits, h: &ParityMatrix, radius: usize, limit: usize) -> Vec<u64> {
    let cols = h.column_syndromes();
    let base = h.syndrome_mask(r_prime.as_u64());
    let target = y.as_u64() ^ base;
    let rp = r_prime.as_u64();
    let mut found = Vec::new();
    for w in 0..=radius.min(h.k) {
        for_each_pattern(h.k, w, |e| {
            if syndrome_of_pattern(&cols, e) == target {
                found.push(rp ^ e);
            }
            found.len() < limit
        });
        if found.len() >= limit {
            break;
        }
    }
    found
}

/// All `r̃` in the radius ball around `r′` with syndrome `y`, by increasing
/// distance from `r′`.
pub fn decode_candidates(r_prime: &Bits, y: &Bits, h: &ParityMatrix, radius: usize) -> Result<Vec<Bits>> {
    check_dims(r_prime, y, h)?;
    Ok(search(r_prime, y, h, radius, usize::MAX)
        .into_iter()
        .map(|v| Bits::from_u64(h.k, v))
        .collect())
}

/// Bob's output: the unique ball solution, or `r′` itself.
pub fn bob_decode(r_prime: &Bits, y: &Bits, h: &ParityMatrix, radius: usize) -> Result<Bits> {
    check_dims(r_prime, y, h)?;
    let found = search(r_prime, y, h, radius, 2);
    Ok(match found.as_slice() {
        [unique] => Bits::from_u64(h.k, *unique),
        _ => r_prime.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgreeOutcome {
    pub w_a: Bits,
    pub w_b: Bits,
    pub sent_bits: usize,
    pub agreed: bool,
    /// Alice's output is her raw correlated bits.
    pub w_a_is_raw: bool,
}

/// One run of the syndrome protocol on the first `k` bits of the tape.
pub fn agree_once(src: &CorrelatedSource, h: &ParityMatrix, radius: usize) -> Result<AgreeOutcome> {
    let k = h.k;
    let r = src.with_party(Party::A).corr_bit_vector(0, k);
    let r_prime = src.with_party(Party::B).corr_bit_vector(0, k);
    let msg = alice_step(&r, h)?;
    let w_b = bob_decode(&r_prime, &msg.syndrome, h, radius)?;
    Ok(AgreeOutcome {
        agreed: msg.w_a == w_b,
        w_a_is_raw: msg.w_a == r,
        w_a: msg.w_a,
        w_b,
        sent_bits: h.ell(),
    })
}

/// Both parties output their first `k` correlated bits; nothing is sent.
pub fn first_k_baseline(src: &CorrelatedSource, k: usize) -> AgreeOutcome {
    let w_a = src.with_party(Party::A).corr_bit_vector(0, k);
    let w_b = src.with_party(Party::B).corr_bit_vector(0, k);
    AgreeOutcome {
        agreed: w_a == w_b,
        w_a_is_raw: true,
        w_a,
        w_b,
        sent_bits: 0,
    }
}

/// How the public parity-check matrix is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixChoice {
    /// One uniformly random matrix.
    Random,
    /// Best of a few random draws by exact success probability, see
    /// [`gen_certified_matrix`].
    Certified { max_collision: f64 },
}

impl Default for MatrixChoice {
    fn default() -> Self {
        MatrixChoice::Certified { max_collision: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreeRow {
    pub k: usize,
    pub rho: f64,
    pub eps: f64,
    pub ell: usize,
    pub radius: usize,
    pub rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub trials: u64,
    /// Exact success probability of the matrix used.
    pub exact_rate: f64,
    /// Every trial had Alice output her raw bits.
    pub raw_output: bool,
}

/// Runs the syndrome protocol `trials` times with one public matrix.
pub fn run_agreement(k: usize, rho: f64, eps: f64, trials: u64, seed: u64, choice: MatrixChoice) -> Result<AgreeRow> {
    CorrelatedSource::new(seed, rho, Party::A)?;
    let mu = (1.0 - rho) / 2.0;
    let radius = decoding_radius(k, eps, mu);
    let matrix_seed = mix64(seed ^ MATRIX_TAG);
    let (h, exact_rate) = match choice {
        MatrixChoice::Random => {
            let h = gen_matrix(matrix_seed, k, eps, mu)?;
            let p = success_probability(&h, mu, radius);
            (h, p)
        }
        MatrixChoice::Certified { max_collision } => {
            gen_certified_matrix(matrix_seed, k, eps, mu, max_collision, DEFAULT_MATRIX_DRAWS)?
        }
    };
    let outcomes = run_trials(seed, trials, |_, s| {
        let src = CorrelatedSource::new(s, rho, Party::A)?;
        agree_once(&src, &h, radius).map(|o| (o.agreed, o.w_a_is_raw))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let p = Proportion::from_flags(outcomes.iter().map(|o| o.0));
    Ok(AgreeRow {
        k,
        rho,
        eps,
        ell: h.ell(),
        radius,
        rate: p.estimate,
        ci_lo: p.lo,
        ci_hi: p.hi,
        trials,
        exact_rate,
        raw_output: outcomes.iter().all(|o| o.1),
    })
}

/// One [`run_agreement`] row per slack value.
pub fn sweep_tradeoff(
    k: usize,
    rho: f64,
    eps_grid: &[f64],
    trials: u64,
    seed: u64,
    choice: MatrixChoice,
) -> Result<Vec<AgreeRow>> {
    if eps_grid.is_empty() {
        return Err(Error::Config("empty eps grid".into()));
    }
    eps_grid
        .iter()
        .map(|&eps| run_agreement(k, rho, eps, trials, seed, choice))
        .collect()
}

/// Agreement rate of the zero-communication baseline.
pub fn run_first_k(k: usize, rho: f64, trials: u64, seed: u64) -> Result<Proportion> {
    CorrelatedSource::new(seed, rho, Party::A)?;
    let flags = run_trials(seed, trials, |_, s| {
        let src = CorrelatedSource::new(s, rho, Party::A).expect("rho validated");
        first_k_baseline(&src, k).agreed
    });
    Ok(Proportion::from_flags(flags))
}

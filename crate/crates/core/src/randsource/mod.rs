//! Seed-addressed correlated randomness.
//!
//! Every draw is a pure function of `(seed, address)`: the address is hashed
//! with the seed into a key that starts a SplitMix64 stream ([`CounterRng`]).
//! Nothing is stored, so arbitrarily long dictionaries and Gaussian streams
//! can be read lazily and in any order.
//!
//! Joint law of a ρ-correlated bit pair: both parties read the same shared
//! uniform bit `u`; party B additionally reads an independent flip channel
//! keyed by the same address and flips `u` with probability `(1−ρ)/2`.
//! Each marginal is uniform and `E[ab] = ρ`. Gaussian pairs use
//! `g′ = ρ·g + √(1−ρ²)·g″` with `g″` drawn from B's channel.

mod rng;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mathcore::Bits;

pub use rng::{bernoulli_mask, derive_seed, mix64, CounterRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
}

impl Party {
    pub fn other(self) -> Party {
        match self {
            Party::A => Party::B,
            Party::B => Party::A,
        }
    }
}

/// Location of a draw in the shared random tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Address {
    /// 64 consecutive positions of the generic bit stream.
    Bits { chunk: u64 },
    /// Coordinate `index` of Gaussian vector `stream`.
    Gaussian { stream: u64, index: u64 },
    /// Standardised sum of Gaussian vector `stream` over a block of coordinates.
    GaussianBlock { stream: u64, block: u64 },
    /// Bits summed into the `index`-th central-limit Gaussian.
    GaussianBits { index: u64, chunk: u64 },
    /// 64 coordinates of the dictionary word for `(message, length)`.
    Dictionary { message: u64, length: u64, chunk: u64 },
    /// Perfectly shared index sequence number `stream`.
    Indices { stream: u64 },
    /// Party-independent public randomness for module-specific uses.
    Aux { tag: u64, a: u64, b: u64 },
}

#[derive(Clone, Copy)]
enum Channel {
    Shared = 1,
    Flip = 2,
}

impl Address {
    fn key(&self, seed: u64, channel: Channel) -> u64 {
        let c = channel as u64;
        match *self {
            Address::Bits { chunk } => rng::hash_words(seed, &[1, c, chunk]),
            Address::Gaussian { stream, index } => rng::hash_words(seed, &[2, c, stream, index]),
            Address::GaussianBlock { stream, block } => rng::hash_words(seed, &[3, c, stream, block]),
            Address::GaussianBits { index, chunk } => rng::hash_words(seed, &[4, c, index, chunk]),
            Address::Dictionary { message, length, chunk } => {
                rng::hash_words(seed, &[5, c, message, length, chunk])
            }
            Address::Indices { stream } => rng::hash_words(seed, &[6, c, stream]),
            Address::Aux { tag, a, b } => rng::hash_words(seed, &[7, c, tag, a, b]),
        }
    }
}

/// One party's view of a ρ-correlated random tape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelatedSource {
    seed: u64,
    rho: f64,
    party: Party,
}

impl CorrelatedSource {
    pub fn new(seed: u64, rho: f64, party: Party) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::OutOfDomain {
                name: "rho",
                value: rho,
                range: "[0, 1]",
            });
        }
        Ok(CorrelatedSource { seed, rho, party })
    }

    /// Alice's and Bob's views of the same tape.
    pub fn pair(seed: u64, rho: f64) -> Result<(Self, Self)> {
        Ok((Self::new(seed, rho, Party::A)?, Self::new(seed, rho, Party::B)?))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn party(&self) -> Party {
        self.party
    }

    pub fn with_party(&self, party: Party) -> Self {
        CorrelatedSource { party, ..*self }
    }

    /// The same view on the tape of trial `index`.
    pub fn for_trial(&self, index: u64) -> Self {
        CorrelatedSource {
            seed: derive_seed(self.seed, index),
            ..*self
        }
    }

    /// Probability that B's bit differs from A's.
    pub fn flip_probability(&self) -> f64 {
        (1.0 - self.rho) / 2.0
    }

    /// Generator for the shared (party-independent) draw at `addr`.
    pub fn shared_rng(&self, addr: Address) -> CounterRng {
        CounterRng::new(addr.key(self.seed, Channel::Shared))
    }

    fn flip_rng(&self, addr: Address) -> CounterRng {
        CounterRng::new(addr.key(self.seed, Channel::Flip))
    }

    /// Public randomness: identical for both parties regardless of ρ.
    pub fn aux_rng(&self, tag: u64, a: u64, b: u64) -> CounterRng {
        self.shared_rng(Address::Aux { tag, a, b })
    }

    /// 64 correlated bits at a chunk address, as seen by this party.
    pub fn bit_word(&self, addr: Address) -> u64 {
        let u = self.shared_rng(addr).next_u64();
        match self.party {
            Party::A => u,
            Party::B => u ^ bernoulli_mask(&mut self.flip_rng(addr), self.flip_probability()),
        }
    }

    /// Positions `offset..offset+count` of the bit stream as 0/1 bits.
    /// Bit value `b` stands for the ±1 symbol `(−1)^b`.
    pub fn corr_bit_vector(&self, offset: u64, count: usize) -> Bits {
        let mut out = Bits::zeros(count);
        let mut cached: Option<(u64, u64)> = None;
        for i in 0..count {
            let pos = offset + i as u64;
            let chunk = pos / 64;
            let word = match cached {
                Some((c, w)) if c == chunk => w,
                _ => {
                    let w = self.bit_word(Address::Bits { chunk });
                    cached = Some((chunk, w));
                    w
                }
            };
            if word >> (pos % 64) & 1 == 1 {
                out.set(i, true);
            }
        }
        out
    }

    /// Positions `offset..offset+count` of the bit stream as ±1 values.
    pub fn corr_bits(&self, offset: u64, count: usize) -> Vec<i8> {
        self.corr_bit_vector(offset, count)
            .iter()
            .map(|b| if b { -1 } else { 1 })
            .collect()
    }

    fn correlated_normal(&self, addr: Address) -> f64 {
        let g: f64 = StandardNormal.sample(&mut self.shared_rng(addr));
        match self.party {
            Party::A => g,
            Party::B => {
                let noise: f64 = StandardNormal.sample(&mut self.flip_rng(addr));
                self.rho * g + (1.0 - self.rho * self.rho).sqrt() * noise
            }
        }
    }

    /// Coordinate `index` of Gaussian vector `stream`.
    pub fn gaussian_at(&self, stream: u64, index: u64) -> f64 {
        self.correlated_normal(Address::Gaussian { stream, index })
    }

    /// Standard normal attached to a block of coordinates of Gaussian vector
    /// `stream`. Scaled by `√|block|` it has the law of the sum of the
    /// block's coordinates, with the same cross-party correlation.
    pub fn gaussian_block(&self, stream: u64, block: u64) -> f64 {
        self.correlated_normal(Address::GaussianBlock { stream, block })
    }

    /// `count` exact ρ-correlated standard normals from stream 0.
    pub fn corr_gaussians_exact(&self, offset: u64, count: usize) -> Vec<f64> {
        (0..count as u64).map(|i| self.gaussian_at(0, offset + i)).collect()
    }

    /// Normals built as `Σ_{i≤N} rᵢ/√N` from `N` correlated ±1 bits each.
    pub fn corr_gaussians_from_bits(&self, offset: u64, count: usize, summands: usize) -> Result<Vec<f64>> {
        if summands == 0 {
            return Err(Error::OutOfDomain {
                name: "summands",
                value: 0.0,
                range: ">= 1",
            });
        }
        let scale = 1.0 / (summands as f64).sqrt();
        let chunks = summands.div_ceil(64);
        Ok((0..count as u64)
            .map(|i| {
                let index = offset + i;
                let mut ones = 0u32;
                for chunk in 0..chunks {
                    let mut w = self.bit_word(Address::GaussianBits {
                        index,
                        chunk: chunk as u64,
                    });
                    let rem = summands - chunk * 64;
                    if rem < 64 {
                        w &= (1u64 << rem) - 1;
                    }
                    ones += w.count_ones();
                }
                // bit 1 is −1, bit 0 is +1
                (summands as f64 - 2.0 * ones as f64) * scale
            })
            .collect())
    }

    /// Chunk `chunk` of the dictionary word `w_{message,length}`; bits past
    /// `length` are zero.
    #[inline]
    pub fn dictionary_chunk(&self, message: u64, length: u64, chunk: u64) -> u64 {
        let w = self.bit_word(Address::Dictionary { message, length, chunk });
        let rem = length.saturating_sub(chunk * 64);
        if rem >= 64 {
            w
        } else {
            w & ((1u64 << rem) - 1)
        }
    }

    /// The dictionary word `w_{message,length}` (bit `b` encodes `(−1)^b`).
    pub fn dictionary_word(&self, message: u64, length: usize) -> Result<Bits> {
        if length == 0 {
            return Err(Error::OutOfDomain {
                name: "length",
                value: 0.0,
                range: ">= 1",
            });
        }
        let words = (0..length.div_ceil(64) as u64)
            .map(|c| self.dictionary_chunk(message, length as u64, c))
            .collect();
        Ok(Bits::from_words(length, words))
    }

    fn require_perfect(&self) -> Result<()> {
        if self.rho != 1.0 {
            return Err(Error::NotPerfectlyShared(self.rho));
        }
        Ok(())
    }

    /// Lazily generated uniform indices in `0..n` from shared stream
    /// `stream`. Needs `ρ = 1`.
    pub fn shared_index_iter(&self, stream: u64, n: usize) -> Result<impl Iterator<Item = usize>> {
        self.require_perfect()?;
        if n == 0 {
            return Err(Error::OutOfDomain {
                name: "n",
                value: 0.0,
                range: ">= 1",
            });
        }
        let mut rng = self.shared_rng(Address::Indices { stream });
        Ok(std::iter::repeat_with(move || rng.random_range(0..n)))
    }

    /// `t` i.i.d. uniform indices in `0..n`, identical for both parties.
    pub fn shared_indices(&self, stream: u64, t: usize, n: usize) -> Result<Vec<usize>> {
        if t == 0 {
            self.require_perfect()?;
            return Ok(Vec::new());
        }
        Ok(self.shared_index_iter(stream, n)?.take(t).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mathcore::hamming;

    fn product_mean(a: &[i8], b: &[i8]) -> f64 {
        a.iter().zip(b).map(|(&x, &y)| (x * y) as f64).sum::<f64>() / a.len() as f64
    }

    #[test]
    fn perfect_correlation_is_identical() {
        let (a, b) = CorrelatedSource::pair(42, 1.0).unwrap();
        assert_eq!(a.corr_bits(5, 1000), b.corr_bits(5, 1000));
        assert_eq!(a.corr_gaussians_exact(0, 100), b.corr_gaussians_exact(0, 100));
        assert_eq!(a.dictionary_word(3, 300).unwrap(), b.dictionary_word(3, 300).unwrap());
    }

    #[test]
    fn deterministic_by_address() {
        let a = CorrelatedSource::new(9, 0.6, Party::B).unwrap();
        let a2 = CorrelatedSource::new(9, 0.6, Party::B).unwrap();
        assert_eq!(a.corr_bits(0, 500), a2.corr_bits(0, 500));
        // Reading an overlapping window gives the same values.
        assert_eq!(a.corr_bits(100, 50), a.corr_bits(0, 500)[100..150].to_vec());
        assert_eq!(a.dictionary_word(7, 77).unwrap(), a2.dictionary_word(7, 77).unwrap());
    }

    #[test]
    fn bit_correlation_matches_rho() {
        for &rho in &[0.0, 0.5, 0.9] {
            let (a, b) = CorrelatedSource::pair(1234, rho).unwrap();
            let n = 200_000;
            let m = product_mean(&a.corr_bits(0, n), &b.corr_bits(0, n));
            let sd = ((1.0 - rho * rho) / n as f64).sqrt().max(1e-9);
            assert!((m - rho).abs() < 4.0 * sd, "rho={rho} got {m}");
        }
    }

    #[test]
    fn dictionary_words_are_noisy_copies() {
        let (a, b) = CorrelatedSource::pair(77, 0.9).unwrap();
        let j = 10_000;
        let d = hamming(&a.dictionary_word(5, j).unwrap(), &b.dictionary_word(5, j).unwrap()).unwrap();
        let frac = d as f64 / j as f64;
        assert!((0.04..=0.06).contains(&frac), "{frac}");
        // Different (i, j) are unrelated.
        let other = a.dictionary_word(6, j).unwrap();
        let frac = hamming(&a.dictionary_word(5, j).unwrap(), &other).unwrap() as f64 / j as f64;
        assert!((frac - 0.5).abs() < 0.03);
    }

    #[test]
    fn gaussian_correlation_and_variance() {
        let (a, b) = CorrelatedSource::pair(5, 0.7).unwrap();
        let n = 100_000;
        let ga = a.corr_gaussians_exact(0, n);
        let gb = b.corr_gaussians_exact(0, n);
        let cov = ga.iter().zip(&gb).map(|(x, y)| x * y).sum::<f64>() / n as f64;
        let va = ga.iter().map(|x| x * x).sum::<f64>() / n as f64;
        let vb = gb.iter().map(|x| x * x).sum::<f64>() / n as f64;
        assert!((cov - 0.7).abs() < 0.015, "{cov}");
        assert!((va - 1.0).abs() < 0.03 && (vb - 1.0).abs() < 0.03);
    }

    #[test]
    fn gaussians_from_one_bit_are_signs() {
        let a = CorrelatedSource::new(1, 0.3, Party::A).unwrap();
        let g = a.corr_gaussians_from_bits(0, 200, 1).unwrap();
        assert!(g.iter().all(|&v| v == 1.0 || v == -1.0));
        assert!(a.corr_gaussians_from_bits(0, 1, 0).is_err());
    }

    #[test]
    fn shared_indices_contract() {
        let (a, b) = CorrelatedSource::pair(8, 1.0).unwrap();
        assert_eq!(a.shared_indices(3, 100, 17).unwrap(), b.shared_indices(3, 100, 17).unwrap());
        assert!(a.shared_indices(3, 0, 17).unwrap().is_empty());
        assert!(a.shared_indices(3, 100, 17).unwrap().iter().all(|&i| i < 17));
        let noisy = CorrelatedSource::new(8, 0.99, Party::A).unwrap();
        assert!(matches!(noisy.shared_indices(0, 5, 10), Err(Error::NotPerfectlyShared(_))));
    }

    #[test]
    fn rejects_bad_rho() {
        assert!(CorrelatedSource::new(0, 1.1, Party::A).is_err());
        assert!(CorrelatedSource::new(0, -0.1, Party::A).is_err());
    }

    #[test]
    fn swapping_parties_preserves_joint_law() {
        // Joint law of (a, b) is symmetric: P[a=+1, b=−1] = P[a=−1, b=+1].
        let (a, b) = CorrelatedSource::pair(31, 0.4).unwrap();
        let n = 200_000;
        let (xa, xb) = (a.corr_bits(0, n), b.corr_bits(0, n));
        let pm = xa.iter().zip(&xb).filter(|(x, y)| **x == 1 && **y == -1).count() as f64 / n as f64;
        let mp = xa.iter().zip(&xb).filter(|(x, y)| **x == -1 && **y == 1).count() as f64 / n as f64;
        assert!((pm - mp).abs() < 4.0 * (0.3f64 * 0.7 / n as f64).sqrt() * 2.0);
    }
}

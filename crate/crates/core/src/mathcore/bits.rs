use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fixed-length bit vector packed into 64-bit words, least significant bit
/// first. Bits past `len` in the last word are always zero.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bits {
    len: usize,
    words: Vec<u64>,
}

impl Bits {
    pub fn zeros(len: usize) -> Self {
        Bits {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut b = Bits {
            len,
            words: vec![u64::MAX; len.div_ceil(64)],
        };
        b.clear_tail();
        b
    }

    /// Builds a vector from packed words, masking anything past `len`.
    pub fn from_words(len: usize, mut words: Vec<u64>) -> Self {
        words.resize(len.div_ceil(64), 0);
        let mut b = Bits { len, words };
        b.clear_tail();
        b
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut b = Bits::zeros(bits.len());
        for (i, &v) in bits.iter().enumerate() {
            if v {
                b.set(i, true);
            }
        }
        b
    }

    /// Low `len` bits of `value` (`len <= 64`).
    pub fn from_u64(len: usize, value: u64) -> Self {
        assert!(len <= 64, "from_u64 holds at most 64 bits");
        Bits::from_words(len, vec![value])
    }

    /// The vector as an integer; only valid for `len <= 64`.
    pub fn as_u64(&self) -> u64 {
        assert!(self.len <= 64, "as_u64 holds at most 64 bits");
        self.words.first().copied().unwrap_or(0)
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % 64);
        if v {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Indices of set bits, ascending.
    pub fn ones_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let tz = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(wi * 64 + tz)
            })
        })
    }

    fn check_len(&self, other: &Bits) -> Result<()> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                left: self.len,
                right: other.len,
            });
        }
        Ok(())
    }

    /// Integer inner product `Σ xᵢyᵢ` of two 0/1 vectors.
    pub fn inner(&self, other: &Bits) -> Result<usize> {
        self.check_len(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum())
    }

    pub fn xor(&self, other: &Bits) -> Result<Bits> {
        self.check_len(other)?;
        Ok(Bits {
            len: self.len,
            words: self.words.iter().zip(&other.words).map(|(a, b)| a ^ b).collect(),
        })
    }

    pub fn not(&self) -> Bits {
        let mut b = Bits {
            len: self.len,
            words: self.words.iter().map(|w| !w).collect(),
        };
        b.clear_tail();
        b
    }

    /// Concatenation `self ‖ other`.
    pub fn concat(&self, other: &Bits) -> Bits {
        let mut out = Bits::zeros(self.len + other.len);
        for i in self.ones_positions() {
            out.set(i, true);
        }
        for i in other.ones_positions() {
            out.set(self.len + i, true);
        }
        out
    }

    /// Reorders coordinates: output position `i` holds input bit `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Bits {
        assert_eq!(perm.len(), self.len);
        let mut out = Bits::zeros(self.len);
        for (i, &src) in perm.iter().enumerate() {
            if self.get(src) {
                out.set(i, true);
            }
        }
        out
    }
}

/// Number of coordinates in which `u` and `v` differ.
pub fn hamming(u: &Bits, v: &Bits) -> Result<usize> {
    u.check_len(v)?;
    Ok(u.words
        .iter()
        .zip(&v.words)
        .map(|(a, b)| (a ^ b).count_ones() as usize)
        .sum())
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len <= 128 {
            write!(f, "Bits({self})")
        } else {
            write!(f, "Bits(len={}, ones={})", self.len, self.count_ones())
        }
    }
}

impl FromStr for Bits {
    type Err = Error;

    /// Parses a string of `0`/`1` characters; surrounding whitespace is ignored.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut b = Bits::zeros(s.len());
        for (i, ch) in s.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => b.set(i, true),
                other => return Err(Error::Parse(format!("unexpected character {other:?} in bit string"))),
            }
        }
        Ok(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hamming_examples() {
        let x: Bits = "1011001".parse().unwrap();
        assert_eq!(hamming(&x, &x).unwrap(), 0);
        let a: Bits = "000".parse().unwrap();
        let b: Bits = "111".parse().unwrap();
        assert_eq!(hamming(&a, &b).unwrap(), 3);
        let a: Bits = "0110".parse().unwrap();
        let b: Bits = "0011".parse().unwrap();
        assert_eq!(hamming(&a, &b).unwrap(), 2);
    }

    #[test]
    fn hamming_rejects_length_mismatch() {
        let a = Bits::zeros(3);
        let b = Bits::zeros(4);
        assert!(matches!(hamming(&a, &b), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn tail_stays_clear() {
        let b = Bits::ones(70);
        assert_eq!(b.count_ones(), 70);
        assert_eq!(b.not().count_ones(), 0);
        let w = Bits::from_words(3, vec![u64::MAX]);
        assert_eq!(w.count_ones(), 3);
    }

    #[test]
    fn ones_positions_and_concat() {
        let a: Bits = "0100000000000000000000000000000000000000000000000000000000000000001".parse().unwrap();
        assert_eq!(a.ones_positions().collect::<Vec<_>>(), vec![1, 66]);
        let c = a.concat(&"11".parse().unwrap());
        assert_eq!(c.len(), a.len() + 2);
        assert_eq!(c.ones_positions().collect::<Vec<_>>(), vec![1, 66, 67, 68]);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!("01x".parse::<Bits>().is_err());
        assert_eq!("  0101\n".parse::<Bits>().unwrap().to_string(), "0101");
    }

    proptest::proptest! {
        #[test]
        fn hamming_is_a_metric(a in proptest::collection::vec(proptest::bool::ANY, 0..200),
                               seed in 0u64..1000) {
            let n = a.len();
            let u = Bits::from_bools(&a);
            let v = Bits::from_bools(&(0..n).map(|i| (i as u64 * 7 + seed).is_multiple_of(3)).collect::<Vec<_>>());
            let w = Bits::from_bools(&(0..n).map(|i| (i as u64 + seed) % 5 < 2).collect::<Vec<_>>());
            let duv = hamming(&u, &v).unwrap();
            proptest::prop_assert_eq!(duv, hamming(&v, &u).unwrap());
            proptest::prop_assert!(duv <= n);
            proptest::prop_assert!(duv <= hamming(&u, &w).unwrap() + hamming(&w, &v).unwrap());
        }
    }
}

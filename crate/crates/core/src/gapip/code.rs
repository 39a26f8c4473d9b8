//! Public binary code for the equality test: Reed–Solomon over GF(256)
//! concatenated with an `[20, 8, 8]` binary inner code.
//!
//! Outer: a message of `K` bytes is the coefficient list of a polynomial
//! `u` of degree `< K`; the codeword is `(u(α⁰), …, u(α^{N−1}))` with
//! `N = 3K ≤ 255`, distance `N − K + 1 = 2K + 1`.
//!
//! Inner: the byte `b` (a polynomial of degree `< 8`) is multiplied by the
//! generator `x¹¹+x¹⁰+x⁶+x⁵+x⁴+x²+1` of the cyclic `[23, 12, 7]` Golay code,
//! giving 19 bits, and an overall parity bit is appended. This is the
//! extended Golay code shortened to 8 information bits, so its minimum
//! weight is 8.
//!
//! The concatenation has rate `8K / 60K = 2/15` and relative distance at
//! least `(2K+1)·8 / 60K > 4/15`.

use crate::error::{Error, Result};
use crate::mathcore::Bits;

pub const INNER_LENGTH: usize = 20;
pub const INNER_DISTANCE: usize = 8;
const GOLAY_GENERATOR: u32 = 0xC75;
const GF_POLY: u16 = 0x11D;

struct Gf256 {
    exp: [u8; 512],
    log: [u8; 256],
}

const GF: Gf256 = build_gf();

const fn build_gf() -> Gf256 {
    let mut exp = [0u8; 512];
    let mut log = [0u8; 256];
    let mut x: u16 = 1;
    let mut i = 0;
    while i < 255 {
        exp[i] = x as u8;
        exp[i + 255] = x as u8;
        log[x as usize] = i as u8;
        x <<= 1;
        if x & 0x100 != 0 {
            x ^= GF_POLY;
        }
        i += 1;
    }
    Gf256 { exp, log }
}

fn gf_mul(a: u8, b: u8) -> u8 {
    if a == 0 || b == 0 {
        0
    } else {
        GF.exp[GF.log[a as usize] as usize + GF.log[b as usize] as usize]
    }
}

/// 20-bit inner codeword of a byte.
pub(crate) fn inner_encode(b: u8) -> u32 {
    let mut word = 0u32;
    for i in 0..8 {
        if b >> i & 1 == 1 {
            word ^= GOLAY_GENERATOR << i;
        }
    }
    word | ((word.count_ones() & 1) << 19)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConcatenatedCode {
    message_bits: usize,
    k: usize,
    n: usize,
}

impl ConcatenatedCode {
    /// Code for messages of `message_bits` bits (at most 680).
    pub fn new(message_bits: usize) -> Result<Self> {
        let k = message_bits.div_ceil(8).max(1);
        let n = 3 * k;
        if n > 255 {
            return Err(Error::OutOfDomain {
                name: "message length",
                value: message_bits as f64,
                range: "0..=680 bits",
            });
        }
        Ok(ConcatenatedCode { message_bits, k, n })
    }

    pub fn message_bits(&self) -> usize {
        self.message_bits
    }

    /// Codeword length in bits.
    pub fn len(&self) -> usize {
        self.n * INNER_LENGTH
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Outer symbols `N` and outer dimension `K`.
    pub fn outer(&self) -> (usize, usize) {
        (self.n, self.k)
    }

    /// Guaranteed minimum distance `(N−K+1)·8`.
    pub fn designed_distance(&self) -> usize {
        (self.n - self.k + 1) * INNER_DISTANCE
    }

    pub fn relative_distance(&self) -> f64 {
        self.designed_distance() as f64 / self.len() as f64
    }

    pub fn rate(&self) -> f64 {
        self.message_bits as f64 / self.len() as f64
    }

    fn outer_encode(&self, bytes: &[u8]) -> Vec<u8> {
        (0..self.n)
            .map(|i| {
                let point = GF.exp[i];
                // Horner from the top coefficient.
                bytes.iter().rev().fold(0u8, |acc, &c| gf_mul(acc, point) ^ c)
            })
            .collect()
    }

    pub fn encode(&self, message: &Bits) -> Result<Bits> {
        if message.len() != self.message_bits {
            return Err(Error::LengthMismatch {
                left: message.len(),
                right: self.message_bits,
            });
        }
        let mut bytes = vec![0u8; self.k];
        for i in message.ones_positions() {
            bytes[i / 8] |= 1 << (i % 8);
        }
        let mut out = Bits::zeros(self.len());
        for (s, sym) in self.outer_encode(&bytes).into_iter().enumerate() {
            let w = inner_encode(sym);
            for b in 0..INNER_LENGTH {
                if w >> b & 1 == 1 {
                    out.set(s * INNER_LENGTH + b, true);
                }
            }
        }
        Ok(out)
    }
}

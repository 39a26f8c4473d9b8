use serde::{Deserialize, Serialize};

use super::{StrategyTree, StrategyVector, MEMBERSHIP_TOL};
use crate::error::{Error, Result};
use crate::gapip::{label_for, Label};
use crate::mathcore::Bits;
use crate::randsource::Party;

/// Gap inner-product instance obtained from a shared-randomness protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedInstance {
    pub x: Bits,
    pub y: Bits,
    pub k: usize,
    /// `(2/3)·2⁻ᵏ`.
    pub c: f64,
    /// `(1/3)·2⁻ᵏ`.
    pub s: f64,
    pub inner: usize,
    pub label: Label,
}

impl ReducedInstance {
    /// Fraction of shared strings on which the protocol accepts.
    pub fn accept_fraction(&self) -> f64 {
        self.inner as f64 * (1usize << self.k) as f64 / self.x.len() as f64
    }
}

fn to_bits(v: &StrategyVector) -> Result<Bits> {
    if !v.is_deterministic() {
        return Err(Error::NotMember("the reduction needs 0/1 strategy vectors".into()));
    }
    let m = v.is_member(MEMBERSHIP_TOL);
    if !m.member {
        return Err(Error::NotMember(m.violation.unwrap_or_default()));
    }
    Ok(Bits::from_bools(&v.masked().iter().map(|&e| e == 1.0).collect::<Vec<_>>()))
}

/// Concatenates the masked strategy vectors of each shared string `R`:
/// `X = (x_{A,R})_R`, `Y = (x_{B,R})_R`, so that `⟨X,Y⟩` counts the strings
/// on which the protocol accepts.
pub fn psr_to_gapip(alice: &[StrategyVector], bob: &[StrategyVector]) -> Result<ReducedInstance> {
    if alice.len() != bob.len() {
        return Err(Error::LengthMismatch {
            left: alice.len(),
            right: bob.len(),
        });
    }
    if alice.is_empty() {
        return Err(Error::StrategyMismatch("no shared strings".into()));
    }
    let k = alice[0].k();
    let mut x = Bits::zeros(0);
    let mut y = Bits::zeros(0);
    for (a, b) in alice.iter().zip(bob) {
        if a.party() != Party::A || b.party() != Party::B || a.k() != k || b.k() != k {
            return Err(Error::StrategyMismatch(
                "every shared string needs an Alice and a Bob vector with the same k".into(),
            ));
        }
        x = x.concat(&to_bits(a)?);
        y = y.concat(&to_bits(b)?);
    }
    let scale = (-(k as f64)).exp2();
    let (c, s) = (2.0 / 3.0 * scale, 1.0 / 3.0 * scale);
    let inner = x.inner(&y)?;
    Ok(ReducedInstance {
        label: label_for(inner as u64, x.len() as u64, c, s),
        x,
        y,
        k,
        c,
        s,
        inner,
    })
}

/// Four-round equality test on 2-bit inputs with shared masks `r = (r₁, r₂)`:
/// Alice sends `⟨a, r₁⟩`; Bob answers whether `⟨b, r₁⟩` matches; Alice sends
/// `⟨a, r₂⟩`; Bob accepts iff both parities matched.
pub fn toy_equality_tree(party: Party, input: u8, r: (u8, u8)) -> Result<StrategyTree> {
    let parity = |mask: u8| (input & mask & 3).count_ones() % 2 == 1;
    StrategyTree::deterministic(party, 4, |j, h| match j {
        0 => parity(r.0),
        1 => parity(r.0) == (h & 1 == 1),
        2 => parity(r.1),
        // h = i₁ i₂ i₃: accept iff round-2 check passed and i₃ matches.
        _ => (h >> 1 & 1 == 1) && parity(r.1) == (h & 1 == 1),
    })
}

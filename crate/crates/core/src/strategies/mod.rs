//! Strategy trees and strategy vectors for `k`-round alternating protocols.
//!
//! Transcripts are `k`-bit strings `i₁…i_k`, stored as integers with `i₁`
//! as the most significant bit. The bit `i_{j+1}` is sent after a history
//! of length `j`; Alice sends it when `j` is even and Bob when `j` is odd.
//! The protocol accepts iff `i_k = 1`.
//!
//! A party's strategy vector `x̄` gives, for each transcript, the product
//! over that party's own rounds of the probability of sending the
//! transcript's bit. The acceptance probability of a pair of strategies is
//! then `Σ_ℓ x̄_A(ℓ)·x̄_B(ℓ)·i_k(ℓ)`.

mod reduction;
mod tree;
mod vector;

use crate::error::{Error, Result};
use crate::randsource::Party;

pub use reduction::{psr_to_gapip, toy_equality_tree, ReducedInstance};
pub use tree::{replay, simulate, SimulationReport, StrategyTree};
pub use vector::{acceptance, Membership, StrategyVector, MEMBERSHIP_TOL};

/// Largest supported number of rounds.
pub const MAX_ROUNDS: usize = 16;

/// Sender of the bit that follows a history of length `j`.
pub fn owner(j: usize) -> Party {
    if j.is_multiple_of(2) {
        Party::A
    } else {
        Party::B
    }
}

/// The verdict bit `i_k` of transcript `ell`.
pub fn verdict(ell: usize) -> bool {
    ell & 1 == 1
}

/// The first `j` bits of a `k`-bit transcript.
pub fn prefix(ell: usize, k: usize, j: usize) -> usize {
    ell >> (k - j)
}

pub(crate) fn check_rounds(k: usize) -> Result<()> {
    if k == 0 || k > MAX_ROUNDS {
        return Err(Error::OutOfDomain {
            name: "k",
            value: k as f64,
            range: "1..=16",
        });
    }
    Ok(())
}

/// History of length `j` as a string of `0`/`1`, first bit first.
pub(crate) fn history_string(h: usize, j: usize) -> String {
    (0..j).map(|i| if h >> (j - 1 - i) & 1 == 1 { '1' } else { '0' }).collect()
}

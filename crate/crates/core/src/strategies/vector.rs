use serde::{Deserialize, Serialize};

use super::{check_rounds, history_string, owner, verdict, StrategyTree};
use crate::error::{Error, Result};
use crate::randsource::Party;

/// Default tolerance of the membership constraints.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// A party's strategy vector `x̄ ∈ [0,1]^(2^k)`, indexed by transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyVector {
    party: Party,
    k: usize,
    raw: Vec<f64>,
}

/// Result of a membership check.
#[derive(Debug, Clone, PartialEq)]
pub struct Membership {
    pub member: bool,
    /// First violated constraint, if any.
    pub violation: Option<String>,
}

impl StrategyVector {
    pub fn new(party: Party, k: usize, raw: Vec<f64>) -> Result<Self> {
        check_rounds(k)?;
        if raw.len() != 1 << k {
            return Err(Error::LengthMismatch {
                left: raw.len(),
                right: 1 << k,
            });
        }
        if let Some(v) = raw.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::OutOfDomain {
                name: "strategy vector entry",
                value: *v,
                range: "[0, 1]",
            });
        }
        Ok(StrategyVector { party, k, raw })
    }

    pub fn party(&self) -> Party {
        self.party
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    /// `x̄ ∗ v`: entries of rejecting transcripts set to zero.
    pub fn masked(&self) -> Vec<f64> {
        self.raw
            .iter()
            .enumerate()
            .map(|(ell, &v)| if verdict(ell) { v } else { 0.0 })
            .collect()
    }

    /// `p(h)` for every history, level by level: `levels()[j][h]` for `h` of
    /// length `j`. Level `k` is `x̄`; above it a level sums its two children
    /// on the party's own rounds and averages them on the other party's.
    pub fn levels(&self) -> Vec<Vec<f64>> {
        let mut levels = vec![Vec::new(); self.k + 1];
        levels[self.k] = self.raw.clone();
        for j in (0..self.k).rev() {
            let below = &levels[j + 1];
            let own = owner(j) == self.party;
            levels[j] = (0..1usize << j)
                .map(|h| {
                    let s = below[2 * h] + below[2 * h + 1];
                    if own {
                        s
                    } else {
                        0.5 * s
                    }
                })
                .collect();
        }
        levels
    }

    /// `p(h)` for a history `h` of length `j ≤ k`.
    pub fn ptranscript(&self, j: usize, h: usize) -> f64 {
        assert!(j <= self.k && h < 1 << j, "history out of range");
        self.levels()[j][h]
    }

    /// Checks `p() = 1` and equality of the two children of every history
    /// at which the other party speaks.
    pub fn is_member(&self, tol: f64) -> Membership {
        let levels = self.levels();
        if (levels[0][0] - 1.0).abs() > tol {
            return Membership {
                member: false,
                violation: Some(format!("p() = {} differs from 1", levels[0][0])),
            };
        }
        for j in 0..self.k {
            if owner(j) == self.party {
                continue;
            }
            for h in 0..1usize << j {
                let (a, b) = (levels[j + 1][2 * h], levels[j + 1][2 * h + 1]);
                if (a - b).abs() > tol {
                    let hs = history_string(h, j);
                    return Membership {
                        member: false,
                        violation: Some(format!("p({hs}0) = {a} but p({hs}1) = {b}")),
                    };
                }
            }
        }
        Membership {
            member: true,
            violation: None,
        }
    }

    pub fn is_deterministic(&self) -> bool {
        self.raw.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    /// `λ·self + (1−λ)·other`.
    pub fn mix(&self, lambda: f64, other: &StrategyVector) -> Result<StrategyVector> {
        if self.party != other.party || self.k != other.k {
            return Err(Error::StrategyMismatch("mixing vectors of different shape".into()));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::OutOfDomain {
                name: "lambda",
                value: lambda,
                range: "[0, 1]",
            });
        }
        let raw = self
            .raw
            .iter()
            .zip(&other.raw)
            .map(|(a, b)| (lambda * a + (1.0 - lambda) * b).clamp(0.0, 1.0))
            .collect();
        StrategyVector::new(self.party, self.k, raw)
    }

    /// Transition tables `f(h) = p(h1)/p(h)` on the party's rounds, `1/2`
    /// where `p(h) = 0`.
    pub fn to_tree(&self) -> Result<StrategyTree> {
        let levels = self.levels();
        StrategyTree::from_fn(self.party, self.k, |j, h| {
            let total = levels[j][h];
            if total <= 0.0 {
                0.5
            } else {
                (levels[j + 1][2 * h + 1] / total).clamp(0.0, 1.0)
            }
        })
    }
}

/// `Σ_ℓ x̄_A(ℓ)·x̄_B(ℓ)·v(ℓ)`.
pub fn acceptance(a: &StrategyVector, b: &StrategyVector) -> Result<f64> {
    if a.party != Party::A || b.party != Party::B {
        return Err(Error::StrategyMismatch(format!(
            "expected Alice's then Bob's vector, got {:?} and {:?}",
            a.party, b.party
        )));
    }
    if a.k != b.k {
        return Err(Error::StrategyMismatch(format!("round counts differ: {} vs {}", a.k, b.k)));
    }
    Ok(a.raw
        .iter()
        .zip(&b.raw)
        .enumerate()
        .filter(|(ell, _)| verdict(*ell))
        .map(|(_, (x, y))| x * y)
        .sum())
}

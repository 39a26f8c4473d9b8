use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_rounds, history_string, owner, prefix, verdict, StrategyVector};
use crate::error::{Error, Result};
use crate::randsource::{derive_seed, CounterRng, Party};

/// One party's transition tables: for each of its rounds `j` and each
/// history `h` of length `j`, the probability of sending 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TreeJson", into = "TreeJson")]
pub struct StrategyTree {
    party: Party,
    k: usize,
    // tables[j] has 2^j entries on the party's rounds and is empty otherwise.
    tables: Vec<Vec<f64>>,
}

/// JSON layout: `{"party": "A", "k": 2, "tables": {"": 0.5, "01": 1.0}}`,
/// keyed by history bitstring.
#[derive(Serialize, Deserialize)]
struct TreeJson {
    party: Party,
    k: usize,
    tables: BTreeMap<String, f64>,
}

impl StrategyTree {
    /// Builds a tree from `f(j, h)`, called for each of the party's rounds.
    pub fn from_fn(party: Party, k: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        check_rounds(k)?;
        let mut tables = Vec::with_capacity(k);
        for j in 0..k {
            if owner(j) == party {
                let t: Vec<f64> = (0..1usize << j).map(|h| f(j, h)).collect();
                if let Some(v) = t.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                    return Err(Error::OutOfDomain {
                        name: "transition probability",
                        value: *v,
                        range: "[0, 1]",
                    });
                }
                tables.push(t);
            } else {
                tables.push(Vec::new());
            }
        }
        Ok(StrategyTree { party, k, tables })
    }

    /// Deterministic tree sending `f(j, h)`.
    pub fn deterministic(party: Party, k: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        Self::from_fn(party, k, |j, h| if f(j, h) { 1.0 } else { 0.0 })
    }

    /// Transition probabilities uniform on `[0, 1]`.
    pub fn random<R: Rng + ?Sized>(party: Party, k: usize, rng: &mut R) -> Result<Self> {
        Self::from_fn(party, k, |_, _| rng.random::<f64>())
    }

    /// Uniformly random deterministic tree.
    pub fn random_deterministic<R: Rng + ?Sized>(party: Party, k: usize, rng: &mut R) -> Result<Self> {
        Self::deterministic(party, k, |_, _| rng.random::<bool>())
    }

    pub fn party(&self) -> Party {
        self.party
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Probability of sending 1 after history `h` of length `j`; `None` on
    /// the other party's rounds.
    pub fn prob_one(&self, j: usize, h: usize) -> Option<f64> {
        self.tables.get(j).and_then(|t| t.get(h)).copied()
    }

    pub fn is_deterministic(&self) -> bool {
        self.tables.iter().flatten().all(|&v| v == 0.0 || v == 1.0)
    }

    /// `x̄(ℓ)`: product over own rounds of the probability of sending ℓ's bit.
    pub fn to_vector(&self) -> StrategyVector {
        let k = self.k;
        let raw = (0..1usize << k)
            .map(|ell| {
                (0..k)
                    .filter(|&j| owner(j) == self.party)
                    .map(|j| {
                        let p1 = self.tables[j][prefix(ell, k, j)];
                        if prefix(ell, k, j + 1) & 1 == 1 {
                            p1
                        } else {
                            1.0 - p1
                        }
                    })
                    .product()
            })
            .collect();
        StrategyVector::new(self.party, k, raw).expect("products of probabilities lie in [0, 1]")
    }
}

impl TryFrom<TreeJson> for StrategyTree {
    type Error = Error;

    fn try_from(j: TreeJson) -> Result<Self> {
        check_rounds(j.k)?;
        let mut seen = 0usize;
        let tree = StrategyTree::from_fn(j.party, j.k, |round, h| {
            seen += 1;
            j.tables.get(&history_string(h, round)).copied().unwrap_or(f64::NAN)
        });
        let tree = tree.map_err(|_| {
            Error::Parse(format!(
                "strategy tables for party {:?} with k = {} need every own-round history with a value in [0, 1]",
                j.party, j.k
            ))
        })?;
        if seen != j.tables.len() {
            return Err(Error::Parse(format!(
                "{} table entries given, {} histories belong to party {:?}",
                j.tables.len(),
                seen,
                j.party
            )));
        }
        Ok(tree)
    }
}

impl From<StrategyTree> for TreeJson {
    fn from(t: StrategyTree) -> Self {
        let mut tables = BTreeMap::new();
        for (j, table) in t.tables.iter().enumerate() {
            for (h, &v) in table.iter().enumerate() {
                tables.insert(history_string(h, j), v);
            }
        }
        TreeJson {
            party: t.party,
            k: t.k,
            tables,
        }
    }
}

fn check_pair(a: &StrategyTree, b: &StrategyTree) -> Result<()> {
    if a.party != Party::A || b.party != Party::B {
        return Err(Error::StrategyMismatch(format!(
            "expected Alice's then Bob's tree, got {:?} and {:?}",
            a.party, b.party
        )));
    }
    if a.k != b.k {
        return Err(Error::StrategyMismatch(format!("round counts differ: {} vs {}", a.k, b.k)));
    }
    Ok(())
}

/// The transcript of two deterministic trees.
pub fn replay(a: &StrategyTree, b: &StrategyTree) -> Result<usize> {
    check_pair(a, b)?;
    if !a.is_deterministic() || !b.is_deterministic() {
        return Err(Error::StrategyMismatch("replay needs deterministic trees".into()));
    }
    let mut h = 0usize;
    for j in 0..a.k {
        let t = if owner(j) == Party::A { a } else { b };
        h = (h << 1) | (t.tables[j][h] == 1.0) as usize;
    }
    Ok(h)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub samples: u64,
    pub accepts: u64,
    /// Count of each transcript.
    pub histogram: Vec<u64>,
}

impl SimulationReport {
    pub fn acceptance(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            self.accepts as f64 / self.samples as f64
        }
    }
}

/// Monte Carlo run of the alternating protocol; sample `i` uses seed
/// `derive_seed(seed, i)`.
pub fn simulate(a: &StrategyTree, b: &StrategyTree, seed: u64, samples: u64) -> Result<SimulationReport> {
    check_pair(a, b)?;
    let k = a.k;
    let histogram = (0..samples)
        .into_par_iter()
        .fold(
            || vec![0u64; 1 << k],
            |mut hist, i| {
                let mut rng = CounterRng::new(derive_seed(seed, i));
                let mut h = 0usize;
                for j in 0..k {
                    let t = if owner(j) == Party::A { a } else { b };
                    // Strict comparison: probability 0 never sends 1.
                    let bit = rng.random::<f64>() < t.tables[j][h];
                    h = (h << 1) | bit as usize;
                }
                hist[h] += 1;
                hist
            },
        )
        .reduce(
            || vec![0u64; 1 << k],
            |mut x, y| {
                x.iter_mut().zip(y).for_each(|(p, q)| *p += q);
                x
            },
        );
    let accepts = histogram
        .iter()
        .enumerate()
        .filter(|(ell, _)| verdict(*ell))
        .map(|(_, c)| c)
        .sum();
    Ok(SimulationReport {
        samples,
        accepts,
        histogram,
    })
}

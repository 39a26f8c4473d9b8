//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use isr_core::agree::ParityMatrix;
use isr_core::mathcore::BooleanFn;
use isr_core::strategies::StrategyTree;
use isr_core::Bits;

pub fn entropy2(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

/// Bit `j` (0-based) of a `k`-bit transcript whose first round is the MSB.
pub fn transcript_bit(ell: usize, k: usize, j: usize) -> bool {
    ell >> (k - 1 - j) & 1 == 1
}

/// Acceptance probability summed over every accepting leaf of the game tree.
pub fn exhaustive_acceptance(a: &StrategyTree, b: &StrategyTree) -> f64 {
    let k = a.k();
    let mut total = 0.0;
    for ell in (0..1usize << k).filter(|l| l & 1 == 1) {
        let mut p = 1.0;
        for j in 0..k {
            let h = ell >> (k - j);
            let p1 = a.prob_one(j, h).or_else(|| b.prob_one(j, h)).expect("one party owns every round");
            p *= if transcript_bit(ell, k, j) { p1 } else { 1.0 - p1 };
        }
        total += p;
    }
    total
}

/// Syndrome by the textbook row-times-vector product over GF(2).
pub fn syndrome_naive(h: &ParityMatrix, r: &Bits) -> Vec<bool> {
    (0..h.ell())
        .map(|i| (0..h.k()).filter(|&j| h.get(i, j) && r.get(j)).count() % 2 == 1)
        .collect()
}

/// Every `c ∈ {0,1}ᵏ` with `Hc = y` and `d(c, r′) ≤ radius`, in increasing
/// integer order of `c`.
pub fn exhaustive_candidates(h: &ParityMatrix, y: &[bool], r_prime: &Bits, radius: usize) -> Vec<Bits> {
    let k = h.k();
    (0..1u64 << k)
        .map(|c| Bits::from_u64(k, c))
        .filter(|c| {
            let d = (0..k).filter(|&j| c.get(j) != r_prime.get(j)).count();
            d <= radius && syndrome_naive(h, c) == y
        })
        .collect()
}

/// `E_{x₋ᵢ} Var_{xᵢ} f` by splitting on coordinate `i` (1-based) and
/// computing each conditional variance from its two values.
pub fn influence_direct(f: &BooleanFn, i: usize) -> f64 {
    let p = f.p();
    let n = f.n();
    let bit = 1usize << (i - 1);
    let mut total = 0.0;
    for x in (0..1usize << n).filter(|x| x & bit == 0) {
        let w: f64 = (0..n)
            .filter(|&j| j != i - 1)
            .map(|j| if x >> j & 1 == 1 { p } else { 1.0 - p })
            .product();
        let (f0, f1) = (f.values()[x], f.values()[x | bit]);
        let mean = p * f1 + (1.0 - p) * f0;
        let var = p * (f1 - mean).powi(2) + (1.0 - p) * (f0 - mean).powi(2);
        total += w * var;
    }
    total
}

/// `T_{1−η} f(x) = Σ_y P[y | x] f(y)` with independent per-coordinate
/// keep-or-resample transitions; exponential in `2n`.
pub fn noise_brute(f: &BooleanFn, eta: f64) -> Vec<f64> {
    let (n, p) = (f.n(), f.p());
    (0..1usize << n)
        .map(|x| {
            (0..1usize << n)
                .map(|y| {
                    let w: f64 = (0..n)
                        .map(|j| {
                            let (xj, yj) = (x >> j & 1, y >> j & 1);
                            let resample = if yj == 1 { eta * p } else { eta * (1.0 - p) };
                            resample + if xj == yj { 1.0 - eta } else { 0.0 }
                        })
                        .product();
                    w * f.values()[y]
                })
                .sum()
        })
        .collect()
}

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mathcore::Bits;
use crate::randsource::{mix64, CounterRng};

const SAMPLER_TAG: u64 = 0xd157;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PairKind {
    /// No-distribution `B_N`.
    No { q: f64 },
    /// Yes-distribution `B_Y`.
    Yes { q: f64 },
    /// `N_{p₁,p₂,θ}` on `{±1}²` with `E[x]=p₁`, `E[y]=p₂`, `E[xy]=θ`; bit 1
    /// stands for `+1`.
    Correlated { p1: f64, p2: f64, theta: f64 },
}

/// Law of one coordinate pair `(x_i, y_i)`. Cells are indexed by
/// `(x << 1) | y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairDistribution {
    pub kind: PairKind,
    cells: [f64; 4],
}

fn q_check(q: f64, min: f64, range: &'static str) -> Result<()> {
    if !(q >= min) || !q.is_finite() {
        return Err(Error::OutOfDomain { name: "q", value: q, range });
    }
    Ok(())
}

impl PairDistribution {
    /// `(1,1)` and `(1,0)` with probability `1/(2q)` each, `(0,1)` and `(0,0)`
    /// with probability `½ − 1/(2q)` each.
    pub fn no(q: f64) -> Result<Self> {
        q_check(q, 1.0, "[1, inf)")?;
        let a = 0.5 / q;
        let b = 0.5 - a;
        Ok(PairDistribution {
            kind: PairKind::No { q },
            cells: [b, b, a, a],
        })
    }

    /// `(1,1)` w.p. `1.95/(2q)`, `(1,0)` w.p. `0.05/(2q)`, `(0,1)` w.p.
    /// `½(1 − 1.95/q)`, `(0,0)` w.p. `½(1 − 0.05/q)`.
    pub fn yes(q: f64) -> Result<Self> {
        q_check(q, 1.95, "[1.95, inf)")?;
        Ok(PairDistribution {
            kind: PairKind::Yes { q },
            cells: [
                0.5 * (1.0 - 0.05 / q),
                0.5 * (1.0 - 1.95 / q),
                0.05 / (2.0 * q),
                1.95 / (2.0 * q),
            ],
        })
    }

    pub fn correlated(p1: f64, p2: f64, theta: f64) -> Result<Self> {
        let pp = (1.0 + theta + p1 + p2) / 4.0;
        let pm = (1.0 - theta + p1 - p2) / 4.0;
        let mp = (1.0 - theta - p1 + p2) / 4.0;
        let mm = (1.0 + theta - p1 - p2) / 4.0;
        let cells = [mm, mp, pm, pp];
        if cells.iter().any(|&c| !(c >= 0.0)) {
            return Err(Error::InvalidDistribution(format!(
                "no distribution on {{-1,1}}^2 has means ({p1}, {p2}) and correlation {theta}"
            )));
        }
        Ok(PairDistribution {
            kind: PairKind::Correlated { p1, p2, theta },
            cells,
        })
    }

    pub fn cells(&self) -> [f64; 4] {
        self.cells
    }

    pub fn prob(&self, x: bool, y: bool) -> f64 {
        self.cells[((x as usize) << 1) | y as usize]
    }

    /// `P[x = 1]`.
    pub fn mean_x(&self) -> f64 {
        self.cells[2] + self.cells[3]
    }

    /// `P[y = 1]`.
    pub fn mean_y(&self) -> f64 {
        self.cells[1] + self.cells[3]
    }

    /// `E[xy]` for 0/1 values, i.e. `P[x = y = 1]`.
    pub fn mean_xy(&self) -> f64 {
        self.cells[3]
    }

    /// Moments `(E[x], E[y], E[xy])` reading bit 1 as `+1` and bit 0 as `−1`.
    pub fn signed_moments(&self) -> (f64, f64, f64) {
        let [mm, mp, pm, pp] = self.cells;
        (pp + pm - mp - mm, pp + mp - pm - mm, pp + mm - pm - mp)
    }

    fn thresholds(&self) -> [u64; 3] {
        let scale = 18446744073709551616.0; // 2^64
        let mut acc = 0.0;
        let mut t = [0u64; 3];
        for (i, slot) in t.iter_mut().enumerate() {
            acc += self.cells[i];
            *slot = if acc >= 1.0 { u64::MAX } else { (acc * scale) as u64 };
        }
        t
    }

    /// `n` i.i.d. coordinate pairs.
    pub fn sample(&self, n: usize, seed: u64) -> (Bits, Bits) {
        sample_mixed(n, seed, |_| self)
    }
}

fn draw_cell(t: &[u64; 3], u: u64) -> usize {
    (u >= t[0]) as usize + (u >= t[1]) as usize + (u >= t[2]) as usize
}

/// Samples coordinate `i` from `law(i)`, independently across coordinates.
pub fn sample_mixed<'a>(n: usize, seed: u64, law: impl Fn(usize) -> &'a PairDistribution) -> (Bits, Bits) {
    let mut rng = CounterRng::new(mix64(seed ^ SAMPLER_TAG));
    let mut xs = vec![0u64; n.div_ceil(64)];
    let mut ys = vec![0u64; n.div_ceil(64)];
    for i in 0..n {
        let cell = draw_cell(&law(i).thresholds(), rng.next_u64());
        xs[i / 64] |= ((cell >> 1) as u64) << (i % 64);
        ys[i / 64] |= ((cell & 1) as u64) << (i % 64);
    }
    (Bits::from_words(n, xs), Bits::from_words(n, ys))
}

/// Mixed instance: coordinates in `bad` from `B_N`, the rest from `B_Y`.
pub fn sample_yes_prime(q: f64, n: usize, bad: &[usize], seed: u64) -> Result<(Bits, Bits)> {
    let yes = PairDistribution::yes(q)?;
    let no = PairDistribution::no(q)?;
    let mut mask = Bits::zeros(n);
    for &i in bad {
        if i >= n {
            return Err(Error::CoordinateOutOfRange { index: i, n });
        }
        mask.set(i, true);
    }
    Ok(sample_mixed(n, seed, |i| if mask.get(i) { &no } else { &yes }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn yes_cells_at_q10() {
        let d = PairDistribution::yes(10.0).unwrap();
        let expect = [(false, true, 0.4025), (false, false, 0.4975), (true, true, 0.0975), (true, false, 0.0025)];
        for (x, y, p) in expect {
            assert!((d.prob(x, y) - p).abs() < 1e-15);
        }
    }

    #[test]
    fn moment_identities() {
        for q in [4.0, 10.0, 16.0] {
            for (d, exy) in [
                (PairDistribution::yes(q).unwrap(), 1.95 / (2.0 * q)),
                (PairDistribution::no(q).unwrap(), 1.0 / (2.0 * q)),
            ] {
                assert!((d.cells().iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!((d.mean_x() - 1.0 / q).abs() < 1e-12);
                assert!((d.mean_y() - 0.5).abs() < 1e-12);
                assert!((d.mean_xy() - exy).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn invalid_parameters() {
        assert!(PairDistribution::yes(1.9).is_err());
        assert!(PairDistribution::no(0.5).is_err());
        assert!(PairDistribution::correlated(0.9, -0.9, 0.9).is_err());
        let d = PairDistribution::correlated(0.2, -0.4, 0.1).unwrap();
        let (a, b, c) = d.signed_moments();
        assert!((a - 0.2).abs() < 1e-15 && (b + 0.4).abs() < 1e-15 && (c - 0.1).abs() < 1e-15);
    }

    #[test]
    fn empirical_no_product_moment() {
        let q = 8.0;
        let d = PairDistribution::no(q).unwrap();
        let (x, y) = d.sample(1_000_000, 3);
        let m = x.inner(&y).unwrap() as f64 / 1e6;
        assert!((m - 1.0 / (2.0 * q)).abs() < 0.003, "{m}");
    }

    #[test]
    fn independence_at_zero_theta() {
        let d = PairDistribution::correlated(0.3, -0.2, -0.06).unwrap();
        // θ = p₁p₂ makes the ±1 coordinates independent.
        let n = 200_000;
        let (x, y) = d.sample(n, 8);
        let mut counts = [0f64; 4];
        for i in 0..n {
            counts[((x.get(i) as usize) << 1) | y.get(i) as usize] += 1.0;
        }
        let px = (counts[2] + counts[3]) / n as f64;
        let py = (counts[1] + counts[3]) / n as f64;
        let mut chi2 = 0.0;
        for (cell, &obs) in counts.iter().enumerate() {
            let e = n as f64 * if cell >> 1 == 1 { px } else { 1.0 - px } * if cell & 1 == 1 { py } else { 1.0 - py };
            chi2 += (obs - e).powi(2) / e;
        }
        // One degree of freedom; 10.83 is the 0.1% critical value.
        assert!(chi2 < 10.83, "{chi2}");
    }

    #[test]
    fn yes_prime_extremes_match_pure_laws() {
        let n = 1000;
        let (x0, y0) = sample_yes_prime(10.0, n, &[], 4).unwrap();
        let (x1, y1) = PairDistribution::yes(10.0).unwrap().sample(n, 4);
        assert_eq!((x0, y0), (x1, y1));
        let all: Vec<usize> = (0..n).collect();
        let (x0, y0) = sample_yes_prime(10.0, n, &all, 4).unwrap();
        let (x1, y1) = PairDistribution::no(10.0).unwrap().sample(n, 4);
        assert_eq!((x0, y0), (x1, y1));
        assert!(sample_yes_prime(10.0, n, &[n], 4).is_err());
    }
}

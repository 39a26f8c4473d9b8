//! Real-valued functions on `{0,1}ⁿ` under the product measure `Bern(p)ⁿ`.
//!
//! Coordinate `i` (1-based in the public API) is bit `i − 1` of a table
//! index, and a subset `S ⊆ [n]` is encoded the same way as a bitmask.
//! Fourier coefficients are taken in the orthonormal basis `χ₀ = 1`,
//! `χ₁(x) = (x − p)/√(p(1−p))`, which reduces to the ±1 characters at
//! `p = 1/2`.

use rand::Rng;

use crate::error::{Error, Result};

pub const MAX_VARS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct BooleanFn {
    n: usize,
    values: Vec<f64>,
    p: f64,
}

impl BooleanFn {
    pub fn new(n: usize, values: Vec<f64>, p: f64) -> Result<Self> {
        if n == 0 || n > MAX_VARS {
            return Err(Error::OutOfDomain {
                name: "n",
                value: n as f64,
                range: "1..=20",
            });
        }
        if values.len() != 1usize << n {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: 1usize << n,
            });
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::OutOfDomain {
                name: "p",
                value: p,
                range: "(0, 1)",
            });
        }
        Ok(BooleanFn { n, values, p })
    }

    /// Like [`BooleanFn::new`] but also requires every value in `[0, 1]`.
    pub fn new_bounded(n: usize, values: Vec<f64>, p: f64) -> Result<Self> {
        if let Some(&v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::OutOfDomain {
                name: "value",
                value: v,
                range: "[0, 1]",
            });
        }
        Self::new(n, values, p)
    }

    pub fn from_fn(n: usize, p: f64, f: impl Fn(usize) -> f64) -> Result<Self> {
        Self::new(n, (0..1usize << n.min(MAX_VARS + 1)).map(f).collect(), p)
    }

    pub fn constant(n: usize, c: f64, p: f64) -> Result<Self> {
        Self::new(n, vec![c; 1usize << n.min(MAX_VARS + 1)], p)
    }

    /// Uniform random values in `[lo, hi]`.
    pub fn random<R: Rng + ?Sized>(n: usize, p: f64, lo: f64, hi: f64, rng: &mut R) -> Result<Self> {
        let len = 1usize << n.min(MAX_VARS + 1);
        Self::new(n, (0..len).map(|_| rng.random_range(lo..=hi)).collect(), p)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_range_bounded(&self) -> bool {
        self.values.iter().all(|v| (0.0..=1.0).contains(v))
    }

    /// Probability of the point `x` under `Bern(p)ⁿ`.
    pub fn measure(&self, x: usize) -> f64 {
        let ones = x.count_ones() as i32;
        self.p.powi(ones) * (1.0 - self.p).powi(self.n as i32 - ones)
    }

    pub fn mean(&self) -> f64 {
        (0..self.values.len()).map(|x| self.measure(x) * self.values[x]).sum()
    }

    pub fn second_moment(&self) -> f64 {
        (0..self.values.len()).map(|x| self.measure(x) * self.values[x] * self.values[x]).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.second_moment() - m * m
    }

    fn check_coord(&self, i: usize) -> Result<usize> {
        if i == 0 || i > self.n {
            return Err(Error::CoordinateOutOfRange { index: i, n: self.n });
        }
        Ok(i - 1)
    }

    /// `E_{x⁽⁻ⁱ⁾}[Var_{xᵢ} f(x)]`, evaluated from the table without any
    /// Fourier machinery. For a two-point space the inner variance is
    /// `p(1−p)(f(x|xᵢ=1) − f(x|xᵢ=0))²`.
    pub fn influence_by_variance(&self, i: usize) -> Result<f64> {
        let bit = 1usize << self.check_coord(i)?;
        let pq = self.p * (1.0 - self.p);
        let mut total = 0.0;
        for x in 0..self.values.len() {
            if x & bit != 0 {
                continue;
            }
            let rest = self.measure(x) / (1.0 - self.p);
            let d = self.values[x | bit] - self.values[x];
            total += rest * pq * d * d;
        }
        Ok(total)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourierExpansion {
    n: usize,
    p: f64,
    coeffs: Vec<f64>,
}

/// Coefficients `f̂(S)` in the `p`-biased orthonormal basis, computed by the
/// butterfly transform in `O(n·2ⁿ)`.
pub fn fourier_expand(f: &BooleanFn) -> FourierExpansion {
    let p = f.p;
    let sigma = (p * (1.0 - p)).sqrt();
    let mut a = f.values.clone();
    for i in 0..f.n {
        let bit = 1usize << i;
        for x in 0..a.len() {
            if x & bit == 0 {
                let (f0, f1) = (a[x], a[x | bit]);
                a[x] = (1.0 - p) * f0 + p * f1;
                a[x | bit] = sigma * (f1 - f0);
            }
        }
    }
    FourierExpansion { n: f.n, p, coeffs: a }
}

impl FourierExpansion {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `f̂(S)` for the subset bitmask `S`.
    pub fn coeff(&self, set: usize) -> f64 {
        self.coeffs[set]
    }

    pub fn squared_mass(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// Inverse transform back to a value table.
    pub fn to_function(&self) -> BooleanFn {
        let p = self.p;
        let sigma = (p * (1.0 - p)).sqrt();
        let (lo, hi) = (-p / sigma, (1.0 - p) / sigma);
        let mut a = self.coeffs.clone();
        for i in 0..self.n {
            let bit = 1usize << i;
            for x in 0..a.len() {
                if x & bit == 0 {
                    let (c0, c1) = (a[x], a[x | bit]);
                    a[x] = c0 + c1 * lo;
                    a[x | bit] = c0 + c1 * hi;
                }
            }
        }
        BooleanFn { n: self.n, values: a, p }
    }

    /// Evaluates `Σ_S f̂(S) Π_{i∈S} χ(xᵢ)` at a single point.
    pub fn evaluate(&self, x: usize) -> f64 {
        let sigma = (self.p * (1.0 - self.p)).sqrt();
        let chi = |bit: bool| if bit { (1.0 - self.p) / sigma } else { -self.p / sigma };
        self.coeffs
            .iter()
            .enumerate()
            .map(|(set, &c)| {
                (0..self.n)
                    .filter(|i| set >> i & 1 == 1)
                    .map(|i| chi(x >> i & 1 == 1))
                    .product::<f64>()
                    * c
            })
            .sum()
    }

    /// Multiplies `f̂(S)` by `(1−η)^{|S|}`.
    pub fn damped(&self, eta: f64) -> FourierExpansion {
        let rho = 1.0 - eta;
        FourierExpansion {
            n: self.n,
            p: self.p,
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(set, &c)| c * rho.powi(set.count_ones() as i32))
                .collect(),
        }
    }

    fn coord_mass(&self, bit: usize, max_degree: usize) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(set, _)| set & bit != 0 && (set.count_ones() as usize) <= max_degree)
            .map(|(_, c)| c * c)
            .sum()
    }
}

/// `Inf_i(f) = Σ_{S ∋ i} f̂(S)²`.
pub fn influence(f: &BooleanFn, i: usize) -> Result<f64> {
    let bit = 1usize << f.check_coord(i)?;
    Ok(fourier_expand(f).coord_mass(bit, f.n))
}

/// `Inf_i^{≤d}(f) = Σ_{S ∋ i, |S| ≤ d} f̂(S)²`.
pub fn low_degree_influence(f: &BooleanFn, i: usize, d: usize) -> Result<f64> {
    let bit = 1usize << f.check_coord(i)?;
    if d == 0 {
        return Err(Error::OutOfDomain {
            name: "d",
            value: 0.0,
            range: ">= 1",
        });
    }
    Ok(fourier_expand(f).coord_mass(bit, d))
}

/// Number of coordinates whose degree-`d` influence exceeds `tau`. For
/// functions into `[−1, 1]` the count never exceeds `d/τ`.
pub fn count_influential(f: &BooleanFn, tau: f64, d: usize) -> Result<usize> {
    if !(tau > 0.0) {
        return Err(Error::OutOfDomain {
            name: "tau",
            value: tau,
            range: "> 0",
        });
    }
    let fe = fourier_expand(f);
    Ok((0..f.n).filter(|&i| fe.coord_mass(1 << i, d) > tau).count())
}

/// `T_{1−η} f`: each coordinate is kept with probability `1−η` and
/// resampled from `Bern(p)` otherwise. Computed as an exact expectation by
/// applying the one-coordinate Markov kernel along every axis.
pub fn noise_operator(f: &BooleanFn, eta: f64) -> Result<BooleanFn> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::OutOfDomain {
            name: "eta",
            value: eta,
            range: "[0, 1]",
        });
    }
    let p = f.p;
    let keep = 1.0 - eta;
    let mut a = f.values.clone();
    for i in 0..f.n {
        let bit = 1usize << i;
        for x in 0..a.len() {
            if x & bit == 0 {
                let (f0, f1) = (a[x], a[x | bit]);
                a[x] = (keep + eta * (1.0 - p)) * f0 + eta * p * f1;
                a[x | bit] = eta * (1.0 - p) * f0 + (keep + eta * p) * f1;
            }
        }
    }
    Ok(BooleanFn { n: f.n, values: a, p })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng(seed: u64) -> rand::rngs::StdRng {
        rand::rngs::StdRng::seed_from_u64(seed)
    }

    #[test]
    fn constant_has_only_empty_coefficient() {
        let f = BooleanFn::constant(4, 0.3, 0.5).unwrap();
        let fe = fourier_expand(&f);
        assert!((fe.coeff(0) - 0.3).abs() < 1e-15);
        assert!(fe.coeffs()[1..].iter().all(|c| c.abs() < 1e-15));
        assert_eq!(influence(&f, 2).unwrap(), 0.0);
        assert_eq!(count_influential(&f, 0.01, 3).unwrap(), 0);
    }

    #[test]
    fn dictator_coefficients() {
        // f(x) = x₁ under p = 1/2: f = 1/2 + (1/2)·χ(x₁) with χ = 2x − 1.
        let f = BooleanFn::from_fn(3, 0.5, |x| (x & 1) as f64).unwrap();
        let fe = fourier_expand(&f);
        assert!((fe.coeff(0) - 0.5).abs() < 1e-15);
        assert!((fe.coeff(1) - 0.5).abs() < 1e-15);
        assert!((influence(&f, 1).unwrap() - 0.25).abs() < 1e-15);
        assert!(influence(&f, 2).unwrap().abs() < 1e-15);
    }

    #[test]
    fn centered_dictator_is_the_only_influential_coordinate() {
        let f = BooleanFn::from_fn(5, 0.5, |x| 2.0 * (x & 1) as f64 - 1.0).unwrap();
        assert_eq!(count_influential(&f, 0.5, 1).unwrap(), 1);
    }

    #[test]
    fn degree_two_character_has_no_degree_one_mass() {
        let f = BooleanFn::from_fn(3, 0.5, |x| {
            let a = 2.0 * (x & 1) as f64 - 1.0;
            let b = 2.0 * (x >> 1 & 1) as f64 - 1.0;
            a * b
        })
        .unwrap();
        assert!(low_degree_influence(&f, 1, 1).unwrap().abs() < 1e-15);
        assert!((low_degree_influence(&f, 1, 2).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn low_degree_is_monotone_and_reaches_influence() {
        let mut r = rng(3);
        let f = BooleanFn::random(6, 0.3, -1.0, 1.0, &mut r).unwrap();
        for i in 1..=6 {
            let mut prev = 0.0;
            for d in 1..=6 {
                let v = low_degree_influence(&f, i, d).unwrap();
                assert!(v + 1e-15 >= prev);
                prev = v;
            }
            assert!((prev - influence(&f, i).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn parseval_and_variance() {
        let mut r = rng(7);
        for &p in &[0.5, 0.2, 0.73] {
            let f = BooleanFn::random(8, p, -2.0, 3.0, &mut r).unwrap();
            let fe = fourier_expand(&f);
            assert!((fe.squared_mass() - f.second_moment()).abs() < 1e-10);
            let var: f64 = fe.coeffs()[1..].iter().map(|c| c * c).sum();
            assert!((var - f.variance()).abs() < 1e-10);
            assert!((fe.coeff(0) - f.mean()).abs() < 1e-12);
        }
    }

    #[test]
    fn reconstruction_round_trip() {
        let mut r = rng(11);
        let f = BooleanFn::random(7, 0.35, 0.0, 1.0, &mut r).unwrap();
        let fe = fourier_expand(&f);
        let back = fe.to_function();
        for x in 0..f.values().len() {
            assert!((back.values()[x] - f.values()[x]).abs() < 1e-9);
        }
        for x in [0usize, 5, 77, 127] {
            assert!((fe.evaluate(x) - f.values()[x]).abs() < 1e-9);
        }
    }

    #[test]
    fn noise_operator_endpoints() {
        let mut r = rng(5);
        let f = BooleanFn::random(5, 0.4, 0.0, 1.0, &mut r).unwrap();
        let same = noise_operator(&f, 0.0).unwrap();
        assert_eq!(same.values(), f.values());
        let flat = noise_operator(&f, 1.0).unwrap();
        let m = f.mean();
        assert!(flat.values().iter().all(|v| (v - m).abs() < 1e-12));
    }

    #[test]
    fn noise_operator_matches_damped_expansion() {
        let mut r = rng(9);
        let f = BooleanFn::random(6, 0.3, 0.0, 1.0, &mut r).unwrap();
        let direct = noise_operator(&f, 0.37).unwrap();
        let spectral = fourier_expand(&f).damped(0.37).to_function();
        for (a, b) in direct.values().iter().zip(spectral.values()) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(direct.is_range_bounded());
    }

    #[test]
    fn error_paths() {
        let f = BooleanFn::constant(3, 0.0, 0.5).unwrap();
        assert!(matches!(influence(&f, 0), Err(Error::CoordinateOutOfRange { .. })));
        assert!(matches!(influence(&f, 4), Err(Error::CoordinateOutOfRange { .. })));
        assert!(count_influential(&f, 0.0, 1).is_err());
        assert!(noise_operator(&f, 1.5).is_err());
        assert!(BooleanFn::new(2, vec![0.0; 3], 0.5).is_err());
        assert!(BooleanFn::new(21, vec![], 0.5).is_err());
        assert!(BooleanFn::new_bounded(1, vec![0.0, 1.5], 0.5).is_err());
    }
}

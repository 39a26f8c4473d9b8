use std::cmp::Ordering;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mathcore::Bits;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Yes,
    No,
    /// Between the thresholds: outside the promise.
    Neither,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Yes => "yes",
            Label::No => "no",
            Label::Neither => "neither",
        })
    }
}

/// Exact comparison of the integer `a` with the real `f · n`, treating the
/// `f64` value `f` as the dyadic rational it represents.
pub fn cmp_int_with_scaled(a: u64, f: f64, n: u64) -> Ordering {
    assert!(f.is_finite(), "threshold must be finite");
    if f < 0.0 {
        return if n == 0 { a.cmp(&0) } else { Ordering::Greater };
    }
    if f == 0.0 || n == 0 {
        return a.cmp(&0);
    }
    // f = mant · 2^exp exactly.
    let bits = f.to_bits();
    let raw_exp = ((bits >> 52) & 0x7ff) as i32;
    let (mant, exp) = if raw_exp == 0 {
        (bits & ((1 << 52) - 1), -1074)
    } else {
        ((bits & ((1 << 52) - 1)) | (1 << 52), raw_exp - 1075)
    };
    // rhs = mant · n < 2^117.
    let rhs = mant as u128 * n as u128;
    if exp >= 0 {
        // Compare a with rhs · 2^exp.
        if exp >= 64 || rhs.leading_zeros() < exp as u32 {
            return Ordering::Less;
        }
        (a as u128).cmp(&(rhs << exp))
    } else {
        // Compare a · 2^(−exp) with rhs.
        let shift = (-exp) as u32;
        let lhs = a as u128;
        if a == 0 {
            return Ordering::Less;
        }
        if shift >= 128 || lhs.leading_zeros() < shift {
            return Ordering::Greater;
        }
        (lhs << shift).cmp(&rhs)
    }
}

/// Yes iff `⟨x,y⟩ ≥ c·n`, No iff `⟨x,y⟩ < s·n`, else Neither; exact.
pub fn label_for(inner: u64, n: u64, c: f64, s: f64) -> Label {
    if cmp_int_with_scaled(inner, c, n) != Ordering::Less {
        Label::Yes
    } else if cmp_int_with_scaled(inner, s, n) == Ordering::Less {
        Label::No
    } else {
        Label::Neither
    }
}

/// A gap inner-product instance with its exact classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapIpInstance {
    pub x: Bits,
    pub y: Bits,
    pub q: f64,
    pub c: f64,
    pub s: f64,
    pub inner: u64,
    pub label: Label,
    /// `‖x‖² ≤ n/q`.
    pub sparse_ok: bool,
}

impl GapIpInstance {
    pub fn new(x: Bits, y: Bits, q: f64, c: f64, s: f64) -> Result<Self> {
        let (label, sparse_ok) = classify(&x, &y, q, c, s)?;
        let inner = x.inner(&y)? as u64;
        Ok(GapIpInstance {
            x,
            y,
            q,
            c,
            s,
            inner,
            label,
            sparse_ok,
        })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }
}

fn check_thresholds(q: f64, c: f64, s: f64) -> Result<()> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::OutOfDomain {
            name: "q",
            value: q,
            range: "(0, inf)",
        });
    }
    if !(c.is_finite() && s.is_finite() && s <= c) {
        return Err(Error::Infeasible(format!("need finite thresholds with s <= c, got c = {c}, s = {s}")));
    }
    Ok(())
}

/// Label and sparsity flag of `(x, y)`.
pub fn classify(x: &Bits, y: &Bits, q: f64, c: f64, s: f64) -> Result<(Label, bool)> {
    check_thresholds(q, c, s)?;
    let inner = x.inner(y)? as u64;
    let n = x.len() as u64;
    let label = label_for(inner, n, c, s);
    // ‖x‖² ≤ n/q ⇔ q·‖x‖² ≤ n.
    let norm = x.count_ones() as u64;
    let sparse_ok = norm == 0 || cmp_int_with_scaled(n, q, norm) != Ordering::Less;
    Ok((label, sparse_ok))
}

/// Two lines of `0`/`1` characters (blank lines and surrounding whitespace
/// ignored).
pub fn parse_instance(text: &str) -> Result<(Bits, Bits)> {
    let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    if lines.len() != 2 {
        return Err(Error::Parse(format!("expected two vector lines, found {}", lines.len())));
    }
    let x: Bits = lines[0].parse()?;
    let y: Bits = lines[1].parse()?;
    if x.len() != y.len() {
        return Err(Error::Parse(format!("vector lengths differ: {} vs {}", x.len(), y.len())));
    }
    Ok((x, y))
}

pub fn read_instance(path: &Path) -> Result<(Bits, Bits)> {
    parse_instance(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn trivial_labels() {
        let n = 100;
        let (label, _) = classify(&Bits::ones(n), &Bits::ones(n), 4.0, 1.0, 0.5).unwrap();
        assert_eq!(label, Label::Yes);
        let (label, sparse) = classify(&Bits::zeros(n), &Bits::ones(n), 4.0, 0.2, 0.1).unwrap();
        assert_eq!((label, sparse), (Label::No, true));
        assert!(classify(&Bits::zeros(3), &Bits::zeros(4), 4.0, 0.2, 0.1).is_err());
    }

    #[test]
    fn exact_threshold_boundaries() {
        // 0.1 is not dyadic: 0.1·10 as a real is slightly above 1.
        assert_eq!(cmp_int_with_scaled(1, 0.1, 10), Ordering::Less);
        assert_eq!(cmp_int_with_scaled(3, 0.25, 12), Ordering::Equal);
        assert_eq!(cmp_int_with_scaled(4, 0.25, 12), Ordering::Greater);
        assert_eq!(cmp_int_with_scaled(0, 0.0, 12), Ordering::Equal);
        assert_eq!(cmp_int_with_scaled(u64::MAX, 1e30, 5), Ordering::Less);
        assert_eq!(cmp_int_with_scaled(1, 1e-300, 5), Ordering::Greater);
        assert_eq!(label_for(3, 12, 0.25, 0.125), Label::Yes);
        assert_eq!(label_for(2, 12, 0.25, 0.125), Label::Neither);
        assert_eq!(label_for(1, 12, 0.25, 0.125), Label::No);
    }

    #[test]
    fn sparsity_flag() {
        let x: Bits = "1100000000000000".parse().unwrap();
        let y = Bits::zeros(16);
        assert!(classify(&x, &y, 8.0, 0.1, 0.05).unwrap().1);
        assert!(!classify(&x, &y, 9.0, 0.1, 0.05).unwrap().1);
    }

    #[test]
    fn instance_text() {
        let (x, y) = parse_instance("0110\n\n 1010 \n").unwrap();
        assert_eq!(x.inner(&y).unwrap(), 1);
        assert!(parse_instance("01\n011\n").is_err());
        assert!(parse_instance("01\n").is_err());
        assert!(parse_instance("01\n0a\n").is_err());
    }

    proptest! {
        #[test]
        fn comparison_matches_rational_arithmetic(a in 0u64..1_000_000, num in 0u64..1000, n in 0u64..100_000) {
            // Dyadic f = num / 1024 is exact in f64.
            let f = num as f64 / 1024.0;
            let expected = (a as u128 * 1024).cmp(&(num as u128 * n as u128));
            prop_assert_eq!(cmp_int_with_scaled(a, f, n), expected);
        }
    }
}

use crate::error::{Error, Result};

/// Binary entropy `h(x) = −x log₂ x − (1−x) log₂(1−x)`, with `0 log 0 = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfDomain {
            name: "x",
            value: x,
            range: "[0, 1]",
        });
    }
    Ok(xlog_inv(x) + xlog_inv(1.0 - x))
}

/// `x log₂(1/x)` with the limit value 0 at `x = 0`.
#[inline]
pub(crate) fn xlog_inv(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.log2()
    }
}

/// Shannon entropy in bits of a probability vector.
pub fn entropy_bits(probs: &[f64]) -> f64 {
    probs.iter().map(|&p| xlog_inv(p)).sum()
}

/// Smallest `x ∈ [lo, 1/2]` with `h(x) ≥ target`, found by bisection.
/// `h` is increasing on `[0, 1/2]`, so this inverts it on that branch.
pub(crate) fn inverse_entropy_lower(target: f64, lo: f64) -> f64 {
    let (mut a, mut b) = (lo, 0.5);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if xlog_inv(mid) + xlog_inv(1.0 - mid) < target {
            a = mid;
        } else {
            b = mid;
        }
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_maximum() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.5).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn small_argument_value() {
        // −0.04·log₂0.04 − 0.96·log₂0.96 = 0.185754… + 0.056538… = 0.242292…
        let h = binary_entropy(0.04).unwrap();
        assert!((h - 0.242292189).abs() < 1e-8, "{h}");
    }

    #[test]
    fn symmetric() {
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            let d = binary_entropy(x).unwrap() - binary_entropy(1.0 - x).unwrap();
            assert!(d.abs() < 1e-12);
        }
    }

    #[test]
    fn domain_errors() {
        assert!(binary_entropy(-0.01).is_err());
        assert!(binary_entropy(1.01).is_err());
        assert!(binary_entropy(f64::NAN).is_err());
    }

    #[test]
    fn inverse_on_lower_branch() {
        let x = inverse_entropy_lower(binary_entropy(0.11).unwrap(), 0.0);
        assert!((x - 0.11).abs() < 1e-12);
    }
}

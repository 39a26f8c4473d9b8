//! Equality testing with imperfectly shared randomness.
//!
//! Each party encodes its string with [`ConcatenatedCode`] and maps the
//! codeword `C` to the balanced vector `X = (C, C̄)` of length `n = 2L`.
//! Then `‖X‖² = L` and `⟨X(a), X(b)⟩ = L − dist(C(a), C(b))`, so equal
//! strings give `n/2` and distinct ones at most `(1 − 4/15)·n/2 < 3n/8`.
//! The gap instance with `c = 1/2`, `s = 3/8` is decided by the amplified
//! Gaussian protocol.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{calibrate_threshold, gaussian_isr_amplified, ConcatenatedCode, Gap, GaussianParams, ThresholdMode};
use crate::error::{Error, Result};
use crate::mathcore::Bits;
use crate::randsource::{CorrelatedSource, CounterRng};

pub const EQUALITY_C: f64 = 0.5;
pub const EQUALITY_S: f64 = 0.375;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EqualityParams {
    pub message_bits: usize,
    pub gaussian: GaussianParams,
    /// Odd number of protocol repetitions.
    pub reps: usize,
}

impl EqualityParams {
    pub fn new(message_bits: usize, t: usize, reps: usize, mode: ThresholdMode) -> Result<Self> {
        ConcatenatedCode::new(message_bits)?;
        let gaussian = GaussianParams::new(Gap::new(EQUALITY_C, EQUALITY_S)?, t, mode)?;
        if reps.is_multiple_of(2) {
            return Err(Error::OutOfDomain {
                name: "repetitions",
                value: reps as f64,
                range: "odd",
            });
        }
        Ok(EqualityParams {
            message_bits,
            gaussian,
            reps,
        })
    }

    /// Threshold at the midpoint between equal pairs and pairs differing in
    /// one bit (the closest distinct codewords in typical cases).
    pub fn calibrated(message_bits: usize, t: usize, reps: usize, rho: f64, samples: u64, seed: u64) -> Result<Self> {
        let draft = Self::new(message_bits, t, reps, ThresholdMode::Calibrated { threshold: 0.0 })?;
        let code = ConcatenatedCode::new(message_bits)?;
        let random_message = |s: u64| {
            let mut rng = CounterRng::new(s);
            Bits::from_bools(&(0..message_bits).map(|_| rng.random::<bool>()).collect::<Vec<_>>())
        };
        let equal = |s: u64| {
            let x = embed(&code, &random_message(s)).expect("length fixed");
            (x.clone(), x)
        };
        let close = |s: u64| {
            let a = random_message(s);
            let mut b = a.clone();
            if message_bits > 0 {
                let j = CounterRng::new(!s).random_range(0..message_bits);
                b.set(j, !b.get(j));
            }
            (embed(&code, &a).expect("length fixed"), embed(&code, &b).expect("length fixed"))
        };
        let cal = calibrate_threshold(&draft.gaussian, rho, samples, seed, equal, close)?;
        Ok(EqualityParams {
            gaussian: draft.gaussian.with_mode(ThresholdMode::Calibrated { threshold: cal.threshold }),
            ..draft
        })
    }
}

/// `(C(a), C̄(a))`.
pub fn embed(code: &ConcatenatedCode, a: &Bits) -> Result<Bits> {
    let c = code.encode(a)?;
    Ok(c.concat(&c.not()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualityReport {
    pub accept: bool,
    pub accepts: usize,
    pub reps: usize,
    pub bits_sent: usize,
    /// Exact inner product of the two embeddings, and their length.
    pub inner: usize,
    pub n: usize,
}

/// Runs the amplified Gaussian protocol on the embeddings of `a` and `b`.
pub fn equality_demo(a: &Bits, b: &Bits, src: &CorrelatedSource, params: &EqualityParams) -> Result<EqualityReport> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let code = ConcatenatedCode::new(params.message_bits)?;
    let x = embed(&code, a)?;
    let y = embed(&code, b)?;
    let r = gaussian_isr_amplified(&x, &y, src, &params.gaussian, params.reps)?;
    Ok(EqualityReport {
        accept: r.accept,
        accepts: r.accepts,
        reps: r.reps,
        bits_sent: r.bits_sent,
        inner: x.inner(&y)?,
        n: x.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gapip::{classify, Label};

    #[test]
    fn embedding_inner_products() {
        let code = ConcatenatedCode::new(128).unwrap();
        let a = Bits::from_u64(64, 0xdead_beef).concat(&Bits::from_u64(64, 0x0123_4567_89ab));
        let mut b = a.clone();
        b.set(100, true);
        let (xa, xb) = (embed(&code, &a).unwrap(), embed(&code, &b).unwrap());
        let n = xa.len();
        assert_eq!(xa.inner(&xa).unwrap(), n / 2);
        assert_eq!(xa.count_ones(), n / 2);
        let ip = xa.inner(&xb).unwrap();
        assert!(ip as f64 <= (1.0 - code.relative_distance()) * n as f64 / 2.0);
        assert_eq!(classify(&xa, &xa, 2.0, EQUALITY_C, EQUALITY_S).unwrap().0, Label::Yes);
        assert_eq!(classify(&xa, &xb, 2.0, EQUALITY_C, EQUALITY_S).unwrap().0, Label::No);
    }

    #[test]
    fn equal_strings_pass_the_floor() {
        let p = EqualityParams::new(16, 64, 1, ThresholdMode::Calibrated { threshold: f64::NEG_INFINITY }).unwrap();
        let a = Bits::from_u64(16, 0x1234);
        let src = CorrelatedSource::new(0, 0.9, crate::randsource::Party::A).unwrap();
        let r = equality_demo(&a, &a, &src, &p).unwrap();
        assert!(r.accept);
        assert!(equality_demo(&a, &Bits::zeros(15), &src, &p).is_err());
        assert!(EqualityParams::new(16, 64, 4, ThresholdMode::Calibrated { threshold: 0.0 }).is_err());
    }
}

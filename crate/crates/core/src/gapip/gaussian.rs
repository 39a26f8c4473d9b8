//! Alice projects `x` onto `t` shared Gaussian vectors and sends the index
//! `ℓ` of the largest projection together with her norm bucket `m`. Bob
//! projects `y` onto his correlated copy of vector `ℓ` and accepts when the
//! projection is large.

use serde::{Deserialize, Serialize};

use super::{bits_for, Gap, ProtocolReport};
use crate::error::{Error, Result};
use crate::harness::{run_trials, Moments};
use crate::mathcore::Bits;
use crate::randsource::{mix64, CorrelatedSource, Party};

/// `√(2 ln 2)`: with base-2 logarithms, the maximum of `t` standard normals
/// is about `√(2 ln 2 · log₂ t)`.
pub const DEFAULT_ALPHA: f64 = 1.177_410_022_515_474_7;
const CALIBRATION_TAG: u64 = 0xca1b;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum ThresholdMode {
    /// `αρ√(log₂ t)·(c+s)n / (2√(m(c−s)n/100))`.
    Literal { alpha: f64 },
    /// A fixed threshold, usually from [`calibrate_threshold`].
    Calibrated { threshold: f64 },
}

/// How projections onto the shared Gaussian vectors are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    /// One standard normal per cell of the instance (coordinates where
    /// `(x_j, y_j)` is `(1,1)`, `(1,0)` or `(0,1)`), scaled by the square root
    /// of the cell size. Equal in joint law to summing coordinates, at `O(t)`
    /// cost per run.
    #[default]
    BlockSums,
    /// One normal per coordinate: `O(t·‖x‖²)` per run.
    Coordinates,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub gap: Gap,
    /// Number of shared Gaussian vectors, at least 2.
    pub t: usize,
    pub mode: ThresholdMode,
    pub backend: Backend,
    /// Separates the randomness of independent repetitions.
    pub round: u32,
}

impl GaussianParams {
    pub fn new(gap: Gap, t: usize, mode: ThresholdMode) -> Result<Self> {
        if t < 2 || t > u32::MAX as usize {
            return Err(Error::OutOfDomain {
                name: "t",
                value: t as f64,
                range: "2..2^32",
            });
        }
        if let ThresholdMode::Literal { alpha } = mode {
            if !(alpha > 0.0) || !alpha.is_finite() {
                return Err(Error::OutOfDomain {
                    name: "alpha",
                    value: alpha,
                    range: "(0, inf)",
                });
            }
        }
        Ok(GaussianParams {
            gap,
            t,
            mode,
            backend: Backend::default(),
            round: 0,
        })
    }

    pub fn with_backend(self, backend: Backend) -> Self {
        GaussianParams { backend, ..self }
    }

    pub fn with_round(self, round: u32) -> Self {
        GaussianParams { round, ..self }
    }

    pub fn with_mode(self, mode: ThresholdMode) -> Self {
        GaussianParams { mode, ..self }
    }

    /// `⌈log₂ t⌉ + ⌈log₂(m_max+1)⌉`.
    pub fn bits_sent(&self) -> usize {
        bits_for(self.t as u64) + bits_for(self.gap.m_max() + 1)
    }

    pub fn literal_threshold(&self, alpha: f64, rho: f64, m: u64, n: usize) -> f64 {
        let Gap { c, s } = self.gap;
        let n = n as f64;
        alpha * rho * (self.t as f64).log2().sqrt() * (c + s) * n / (2.0 * (m as f64 * (c - s) * n / 100.0).sqrt())
    }

    fn stream(&self, i: usize) -> u64 {
        ((self.round as u64) << 32) | i as u64
    }
}

const CELL_11: u64 = 0;
const CELL_10: u64 = 1;
const CELL_01: u64 = 2;

trait Projections {
    fn alice(&self, stream: u64) -> f64;
    fn bob(&self, stream: u64) -> f64;
}

struct BlockSums {
    alice: CorrelatedSource,
    bob: CorrelatedSource,
    sqrt11: f64,
    sqrt10: f64,
    sqrt01: f64,
}

impl Projections for BlockSums {
    fn alice(&self, stream: u64) -> f64 {
        self.sqrt11 * self.alice.gaussian_block(stream, CELL_11)
            + self.sqrt10 * self.alice.gaussian_block(stream, CELL_10)
    }

    fn bob(&self, stream: u64) -> f64 {
        self.sqrt11 * self.bob.gaussian_block(stream, CELL_11) + self.sqrt01 * self.bob.gaussian_block(stream, CELL_01)
    }
}

struct Coordinates {
    alice: CorrelatedSource,
    bob: CorrelatedSource,
    // Addresses of the support of x and of y, ascending.
    x_addr: Vec<u64>,
    y_addr: Vec<u64>,
}

impl Projections for Coordinates {
    fn alice(&self, stream: u64) -> f64 {
        self.x_addr.iter().map(|&a| self.alice.gaussian_at(stream, a)).sum()
    }

    fn bob(&self, stream: u64) -> f64 {
        self.y_addr.iter().map(|&a| self.bob.gaussian_at(stream, a)).sum()
    }
}

fn support_addresses(v: &Bits, addresses: Option<&[u64]>) -> Vec<u64> {
    let mut a: Vec<u64> = match addresses {
        Some(map) => v.ones_positions().map(|j| map[j]).collect(),
        None => v.ones_positions().map(|j| j as u64).collect(),
    };
    a.sort_unstable();
    a
}

fn run(x: &Bits, src: &CorrelatedSource, params: &GaussianParams, proj: &dyn Projections) -> ProtocolReport {
    let n = x.len();
    let norm = x.count_ones();
    let m = params.gap.bucket(norm, n);
    let mut report = ProtocolReport {
        accept: false,
        ell: 1,
        m,
        bits_sent: params.bits_sent(),
        statistic: None,
        threshold: None,
    };
    if norm > 0 {
        let mut best = f64::NEG_INFINITY;
        for i in 0..params.t {
            let v = proj.alice(params.stream(i));
            if v > best {
                best = v;
                report.ell = i + 1;
            }
        }
    }
    if !params.gap.passes_floor(m) {
        return report;
    }
    let stat = proj.bob(params.stream(report.ell - 1));
    let threshold = match params.mode {
        ThresholdMode::Literal { alpha } => params.literal_threshold(alpha, src.rho(), m, n),
        ThresholdMode::Calibrated { threshold } => threshold,
    };
    report.statistic = Some(stat);
    report.threshold = Some(threshold);
    report.accept = stat >= threshold;
    report
}

fn check_lengths(x: &Bits, y: &Bits) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    Ok(())
}

/// One run of the Gaussian protocol on the tape of `src` (either party's
/// view; both views are derived from it).
pub fn gaussian_isr_protocol(
    x: &Bits,
    y: &Bits,
    src: &CorrelatedSource,
    params: &GaussianParams,
) -> Result<ProtocolReport> {
    check_lengths(x, y)?;
    let alice = src.with_party(Party::A);
    let bob = src.with_party(Party::B);
    Ok(match params.backend {
        Backend::BlockSums => {
            let n11 = x.inner(y)?;
            let proj = BlockSums {
                alice,
                bob,
                sqrt11: (n11 as f64).sqrt(),
                sqrt10: ((x.count_ones() - n11) as f64).sqrt(),
                sqrt01: ((y.count_ones() - n11) as f64).sqrt(),
            };
            run(x, src, params, &proj)
        }
        Backend::Coordinates => gaussian_with_map(x, y, src, params, None),
    })
}

fn gaussian_with_map(
    x: &Bits,
    y: &Bits,
    src: &CorrelatedSource,
    params: &GaussianParams,
    addresses: Option<&[u64]>,
) -> ProtocolReport {
    let proj = Coordinates {
        alice: src.with_party(Party::A),
        bob: src.with_party(Party::B),
        x_addr: support_addresses(x, addresses),
        y_addr: support_addresses(y, addresses),
    };
    run(x, src, params, &proj)
}

/// Coordinate backend where coordinate `j` reads Gaussian coordinate
/// `addresses[j]` of every shared vector. Permuting `x`, `y` and the
/// address map together leaves every decision unchanged.
pub fn gaussian_isr_with_addresses(
    x: &Bits,
    y: &Bits,
    src: &CorrelatedSource,
    params: &GaussianParams,
    addresses: &[u64],
) -> Result<ProtocolReport> {
    check_lengths(x, y)?;
    if addresses.len() != x.len() {
        return Err(Error::LengthMismatch {
            left: addresses.len(),
            right: x.len(),
        });
    }
    Ok(gaussian_with_map(x, y, src, params, Some(addresses)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplifiedReport {
    pub accept: bool,
    pub accepts: usize,
    pub reps: usize,
    pub bits_sent: usize,
}

/// Majority vote over `reps` (odd) independent runs, run `r` using round `r`.
pub fn gaussian_isr_amplified(
    x: &Bits,
    y: &Bits,
    src: &CorrelatedSource,
    params: &GaussianParams,
    reps: usize,
) -> Result<AmplifiedReport> {
    if reps.is_multiple_of(2) {
        return Err(Error::OutOfDomain {
            name: "repetitions",
            value: reps as f64,
            range: "odd",
        });
    }
    let mut accepts = 0;
    for r in 0..reps {
        let p = params.with_round(params.round.wrapping_add(r as u32));
        accepts += gaussian_isr_protocol(x, y, src, &p)?.accept as usize;
    }
    Ok(AmplifiedReport {
        accept: 2 * accepts > reps,
        accepts,
        reps,
        bits_sent: reps * params.bits_sent(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub threshold: f64,
    pub yes_mean: f64,
    pub no_mean: f64,
    pub samples: u64,
}

/// Midpoint of the mean of Bob's statistic on instances from `yes` and on
/// instances from `no` (each called with a per-sample seed). Runs whose
/// bucket fails the floor contribute no statistic.
pub fn calibrate_threshold<Y, N>(
    params: &GaussianParams,
    rho: f64,
    samples: u64,
    seed: u64,
    yes: Y,
    no: N,
) -> Result<Calibration>
where
    Y: Fn(u64) -> (Bits, Bits) + Sync + Send,
    N: Fn(u64) -> (Bits, Bits) + Sync + Send,
{
    let calib_seed = mix64(seed ^ CALIBRATION_TAG);
    let stats = |gen: &(dyn Fn(u64) -> (Bits, Bits) + Sync), offset: u64| -> Result<Moments> {
        let out = run_trials(mix64(calib_seed.wrapping_add(offset)), samples, |_, s| -> Result<Option<f64>> {
            let (x, y) = gen(s);
            let src = CorrelatedSource::new(s, rho, Party::A)?;
            Ok(gaussian_isr_protocol(&x, &y, &src, params)?.statistic)
        });
        let mut m = Moments::default();
        for r in out {
            if let Some(v) = r? {
                m.push(v);
            }
        }
        Ok(m)
    };
    let ys = stats(&yes, 1)?;
    let ns = stats(&no, 2)?;
    if ys.count() == 0 || ns.count() == 0 {
        return Err(Error::Infeasible(
            "calibration produced no statistic for one class (all buckets below the floor)".into(),
        ));
    }
    Ok(Calibration {
        threshold: 0.5 * (ys.mean() + ns.mean()),
        yes_mean: ys.mean(),
        no_mean: ns.mean(),
        samples,
    })
}

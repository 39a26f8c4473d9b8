//! Acceptance suite. Runs every criterion in order, prints one line per
//! criterion and exits non-zero if any fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use isr_core::agree::{
    bob_decode, decode_candidates, decoding_radius, gen_matrix, run_agreement, run_first_k, syndrome_length,
    MatrixChoice,
};
use isr_core::compress::{run_compression_experiment, CompressParams, ProbVec};
use isr_core::gapip::{
    calibrate_threshold, gaussian_amplified_trials, gaussian_trials, sample_instance, sample_yes_prime,
    sparse_repeated_trials, sparse_trials, Gap, GaussianParams, InstanceClass, Label, PairDistribution,
    SparseParams, ThresholdMode,
};
use isr_core::harness::{wilson_interval, Proportion, Z95};
use isr_core::mathcore::{count_influential, fourier_expand, influence, noise_operator, BooleanFn};
use isr_core::randsource::{mix64, CounterRng};
use isr_core::strategies::{acceptance, psr_to_gapip, replay, simulate, toy_equality_tree, StrategyTree};
use isr_core::{Bits, CorrelatedSource, Party};
use rand::seq::SliceRandom;
use rand::Rng;

use common::{entropy2, exhaustive_acceptance, exhaustive_candidates, influence_direct, noise_brute, syndrome_naive};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit_s: u64) -> Result<(), String> {
    check(
        elapsed <= Duration::from_secs(limit_s),
        format!("took {:.1}s, limit {limit_s}s", elapsed.as_secs_f64()),
    )
}

fn rate(records: &[isr_core::gapip::TrialRecord]) -> Proportion {
    Proportion::from_flags(records.iter().map(|r| r.accept))
}

fn c1_source_fidelity() -> Outcome {
    let pairs = 1_000_000;
    let mut notes = Vec::new();
    for (i, rho) in [0.0, 0.5, 0.9, 0.98, 1.0].into_iter().enumerate() {
        let start = Instant::now();
        let (a, b) = CorrelatedSource::pair(mix64(0xC1 + i as u64), rho).map_err(|e| e.to_string())?;
        let (xa, xb) = (a.corr_bits(0, pairs), b.corr_bits(0, pairs));
        let sum: i64 = xa.iter().zip(&xb).map(|(&u, &v)| (u * v) as i64).sum();
        let mean = sum as f64 / pairs as f64;
        let sigma = (1.0 - rho * rho).sqrt() / 1e3;
        within(start.elapsed(), 5)?;
        check(
            (mean - rho).abs() <= 4.0 * sigma,
            format!("rho {rho}: E[ab] = {mean}, allowed ±{}", 4.0 * sigma),
        )?;
        notes.push(format!("{rho}:{mean:.4}"));
    }
    Ok(format!("E[ab] {}", notes.join(" ")))
}

fn c2_compression() -> Outcome {
    let start = Instant::now();
    let p = ProbVec::geometric_with_entropy(4096, 6.0).map_err(|e| e.to_string())?;
    let q = p.perturbed(1.0, 0xC2).map_err(|e| e.to_string())?;
    let params = CompressParams::new(0.9, 1.0, 0.1, 1.0).map_err(|e| e.to_string())?;
    let r = run_compression_experiment(&p, &q, &params, 2000, 0xC2C2).map_err(|e| e.to_string())?;
    let h = p.entropy();
    check((h - 6.0).abs() < 0.01, format!("H(P) = {h}"))?;
    check(r.promise_gap <= 1.0 + 1e-12, format!("promise gap {}", r.promise_gap))?;
    let bound = 2.0 / (1.0 - entropy2(0.05)) * (h + 2.0 + r.c as f64) + 1.0;
    check(r.success.lo >= 0.9, format!("success lower bound {:.4} < 0.9", r.success.lo))?;
    check(
        r.mean_length <= bound,
        format!("mean length {:.1} exceeds {bound:.1}", r.mean_length),
    )?;
    within(start.elapsed(), 120)?;
    Ok(format!(
        "success {:.4} (lo {:.4}), mean length {:.1} <= {bound:.1}, c = {}",
        r.success.estimate, r.success.lo, r.mean_length, r.c
    ))
}

fn c3_agreement() -> Outcome {
    let start = Instant::now();
    let (k, rho, eps) = (24, 0.98, 0.1);
    let mu = (1.0 - rho) / 2.0;
    let ell = syndrome_length(k, eps, mu).map_err(|e| e.to_string())?;
    check(ell == 12, format!("ell = {ell}"))?;
    let row = run_agreement(k, rho, eps, 2000, 0xC3, MatrixChoice::default()).map_err(|e| e.to_string())?;
    check(row.ell == 12 && row.ell < k, format!("row ell = {}", row.ell))?;
    check(row.rate >= 0.9, format!("agreement rate {:.4}", row.rate))?;
    check(row.raw_output, "Alice's output differed from her raw bits")?;

    // Exhaustive decoder on small k.
    let mut rng = CounterRng::new(0xC3C3);
    for case in 0..100u64 {
        let k = rng.random_range(4..=12usize);
        let (eps, mu) = (0.1, 0.05);
        let h = gen_matrix(mix64(case), k, eps, mu).map_err(|e| e.to_string())?;
        let radius = decoding_radius(k, eps, mu) + (case % 2) as usize;
        let r = Bits::from_u64(k, rng.random::<u64>() & ((1u64 << k) - 1));
        let mut rp = r.clone();
        for j in 0..k {
            if rng.random::<f64>() < 0.15 {
                rp.set(j, !rp.get(j));
            }
        }
        let y_naive = syndrome_naive(&h, &r);
        let y = h.syndrome(&r).map_err(|e| e.to_string())?;
        check(y.iter().collect::<Vec<_>>() == y_naive, format!("case {case}: syndrome mismatch"))?;
        let mut got = decode_candidates(&rp, &y, &h, radius).map_err(|e| e.to_string())?;
        got.sort_by_key(|b| b.as_u64());
        let want = exhaustive_candidates(&h, &y_naive, &rp, radius);
        check(got == want, format!("case {case}: candidate sets differ"))?;
        let out = bob_decode(&rp, &y, &h, radius).map_err(|e| e.to_string())?;
        let expect = if want.len() == 1 { want[0].clone() } else { rp.clone() };
        check(out == expect, format!("case {case}: decoder output differs"))?;
    }
    within(start.elapsed(), 60)?;
    Ok(format!("ell 12, rate {:.4} [{:.4}, {:.4}], 100/100 oracle cases", row.rate, row.ci_lo, row.ci_hi))
}

fn c4_first_k() -> Outcome {
    let p = run_first_k(10, 0.9, 100_000, 0xC4).map_err(|e| e.to_string())?;
    let target = 0.95f64.powi(10);
    check(
        (p.estimate - target).abs() <= 0.02,
        format!("{:.5} vs {target:.5}", p.estimate),
    )?;
    Ok(format!("{:.5} vs {target:.5}", p.estimate))
}

fn c5_strategies() -> Outcome {
    let start = Instant::now();
    let mut rng = CounterRng::new(0xC5);
    let (mut worst_exact, mut worst_mc) = (0.0f64, 0.0f64);
    for k in [2, 4] {
        for i in 0..100u64 {
            let a = StrategyTree::random(Party::A, k, &mut rng).map_err(|e| e.to_string())?;
            let b = StrategyTree::random(Party::B, k, &mut rng).map_err(|e| e.to_string())?;
            let ip = acceptance(&a.to_vector(), &b.to_vector()).map_err(|e| e.to_string())?;
            let exact = exhaustive_acceptance(&a, &b);
            worst_exact = worst_exact.max((exact - ip).abs());
            let sim = simulate(&a, &b, mix64(i ^ (k as u64) << 32), 100_000).map_err(|e| e.to_string())?;
            worst_mc = worst_mc.max((sim.acceptance() - ip).abs());
        }
    }
    check(worst_exact <= 1e-12, format!("exhaustive gap {worst_exact:e}"))?;
    check(worst_mc <= 0.01, format!("Monte Carlo gap {worst_mc}"))?;
    for k in [2, 4] {
        for _ in 0..100 {
            let a = StrategyTree::random_deterministic(Party::A, k, &mut rng).map_err(|e| e.to_string())?;
            let b = StrategyTree::random_deterministic(Party::B, k, &mut rng).map_err(|e| e.to_string())?;
            let ip = acceptance(&a.to_vector(), &b.to_vector()).map_err(|e| e.to_string())?;
            let verdict = replay(&a, &b).map_err(|e| e.to_string())? & 1;
            check(ip == 0.0 || ip == 1.0, format!("deterministic inner product {ip}"))?;
            check(ip == verdict as f64, "inner product disagrees with replay")?;
        }
    }
    within(start.elapsed(), 60)?;
    Ok(format!("exact gap {worst_exact:.1e}, Monte Carlo gap {worst_mc:.4}"))
}

fn c6_gaussian() -> Outcome {
    let start = Instant::now();
    let (q, n, t) = (4.0, 1 << 16, 1024);
    let gap = Gap::for_q(q).map_err(|e| e.to_string())?;
    let base = GaussianParams::new(gap, t, ThresholdMode::Calibrated { threshold: 0.0 }).map_err(|e| e.to_string())?;

    let m_max = (100.0f64 / (0.9 / 4.0 - 0.6 / 4.0) - 1e-9).ceil() as u64;
    let expect_bits = 10 + (64 - m_max.leading_zeros()) as usize;
    check(base.bits_sent() == expect_bits, format!("bits {} vs {expect_bits}", base.bits_sent()))?;

    let mut notes = Vec::new();
    for (rho, need) in [(1.0, 0.05), (0.9, 0.03)] {
        let seed = mix64(0xC6 ^ (rho * 100.0) as u64);
        let cal = calibrate_threshold(
            &base,
            rho,
            400,
            seed,
            |s| sample_instance(InstanceClass::Yes, q, n, s).unwrap(),
            |s| sample_instance(InstanceClass::No, q, n, s).unwrap(),
        )
        .map_err(|e| e.to_string())?;
        let params = base.with_mode(ThresholdMode::Calibrated { threshold: cal.threshold });
        let yes = gaussian_trials(InstanceClass::Yes, q, n, rho, &params, 2000, seed ^ 1).map_err(|e| e.to_string())?;
        let no = gaussian_trials(InstanceClass::No, q, n, rho, &params, 2000, seed ^ 2).map_err(|e| e.to_string())?;
        check(
            yes.iter().chain(&no).all(|r| r.bits_sent == expect_bits),
            "bits sent differ between shots",
        )?;
        let (py, pn) = (rate(&yes), rate(&no));
        let d = py.estimate - pn.estimate;
        check(d >= need, format!("rho {rho}: gap {d:.4} < {need}"))?;
        check(py.separated_above(&pn), format!("rho {rho}: intervals overlap"))?;
        notes.push(format!("rho {rho}: {:.3}/{:.3}", py.estimate, pn.estimate));

        if rho < 1.0 {
            let yes = gaussian_amplified_trials(InstanceClass::Yes, q, n, rho, &params, 33, 300, seed ^ 3)
                .map_err(|e| e.to_string())?;
            let no = gaussian_amplified_trials(InstanceClass::No, q, n, rho, &params, 33, 300, seed ^ 4)
                .map_err(|e| e.to_string())?;
            let (ay, an) = (rate(&yes).estimate, 1.0 - rate(&no).estimate);
            check(ay >= 2.0 / 3.0 && an >= 2.0 / 3.0, format!("majority-of-33: yes {ay:.3}, no {an:.3}"))?;
            notes.push(format!("maj33 {ay:.3}/{an:.3}"));
        }
    }
    within(start.elapsed(), 300)?;
    Ok(format!("{}, bits {expect_bits}", notes.join(", ")))
}

fn c7_sparse() -> Outcome {
    let start = Instant::now();
    let n = 1 << 16;
    let params = SparseParams::new(Gap::new(0.9 / 16.0, 0.6 / 16.0).map_err(|e| e.to_string())?, 16.0)
        .map_err(|e| e.to_string())?;
    let yes = sparse_trials(InstanceClass::Yes, n, &params, 5000, 0xC7).map_err(|e| e.to_string())?;
    let no = sparse_trials(InstanceClass::No, n, &params, 5000, 0xC77).map_err(|e| e.to_string())?;
    let (py, pn) = (rate(&yes), rate(&no));
    check(py.separated_above(&pn), format!("atomic {:.4} vs {:.4}", py.estimate, pn.estimate))?;

    let m = params.gap.sparse_m_max(16.0);
    let reps = 9 * m * m;
    let trials = 12;
    let yes = sparse_repeated_trials(InstanceClass::Yes, n, &params, reps, trials, 0xC7C7).map_err(|e| e.to_string())?;
    let no = sparse_repeated_trials(InstanceClass::No, n, &params, reps, trials, 0xC7C8).map_err(|e| e.to_string())?;
    let (ry, rn) = (rate(&yes).estimate, 1.0 - rate(&no).estimate);
    check(ry >= 2.0 / 3.0 && rn >= 2.0 / 3.0, format!("repeated: yes {ry:.3}, no {rn:.3}"))?;
    within(start.elapsed(), 180)?;
    Ok(format!(
        "atomic {:.4} vs {:.4}; repeated ({reps} reps) {ry:.2}/{rn:.2}",
        py.estimate, pn.estimate
    ))
}

fn c8_influence() -> Outcome {
    let start = Instant::now();
    let mut rng = CounterRng::new(0xC8);
    let (mut inf, mut noise, mut parseval) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..100usize {
        let n = 1 + i % 10;
        let p = rng.random_range(0.05..0.95);
        let f = BooleanFn::random(n, p, -1.0, 1.0, &mut rng).map_err(|e| e.to_string())?;
        let fe = fourier_expand(&f);
        for j in 1..=n {
            let fourier = influence(&f, j).map_err(|e| e.to_string())?;
            inf = inf.max((fourier - f.influence_by_variance(j).unwrap()).abs());
            inf = inf.max((fourier - influence_direct(&f, j)).abs());
        }
        let eta = rng.random::<f64>();
        let direct = noise_operator(&f, eta).map_err(|e| e.to_string())?;
        let spectral = fe.damped(eta).to_function();
        for (a, b) in direct.values().iter().zip(spectral.values()) {
            noise = noise.max((a - b).abs());
        }
        if n <= 6 {
            for (a, b) in direct.values().iter().zip(noise_brute(&f, eta)) {
                noise = noise.max((a - b).abs());
            }
        }
        parseval = parseval.max((fe.squared_mass() - f.second_moment()).abs());
        let f01 = BooleanFn::random(n, p, 0.0, 1.0, &mut rng).map_err(|e| e.to_string())?;
        let (tau, d) = (rng.random_range(0.001..0.3), rng.random_range(1..=n));
        let t = count_influential(&f01, tau, d).map_err(|e| e.to_string())?;
        check(t as f64 <= d as f64 / tau, format!("{t} influential coordinates, bound {}", d as f64 / tau))?;
    }
    check(inf <= 1e-10, format!("influence gap {inf:e}"))?;
    check(noise <= 1e-9, format!("noise gap {noise:e}"))?;
    check(parseval <= 1e-10, format!("Parseval gap {parseval:e}"))?;
    within(start.elapsed(), 30)?;
    Ok(format!("gaps: influence {inf:.1e}, noise {noise:.1e}, Parseval {parseval:.1e}"))
}

fn c9_distributions() -> Outcome {
    for q in [4.0, 10.0, 16.0] {
        let yes = PairDistribution::yes(q).map_err(|e| e.to_string())?;
        let no = PairDistribution::no(q).map_err(|e| e.to_string())?;
        for (d, xy) in [(&yes, 1.95 / (2.0 * q)), (&no, 1.0 / (2.0 * q))] {
            let c = d.cells();
            let sum: f64 = c.iter().sum();
            check((sum - 1.0).abs() <= 1e-12, format!("q {q}: cells sum to {sum}"))?;
            check((c[2] + c[3] - 1.0 / q).abs() <= 1e-12, format!("q {q}: x marginal"))?;
            check((c[1] + c[3] - 0.5).abs() <= 1e-12, format!("q {q}: y marginal"))?;
            check((c[3] - xy).abs() <= 1e-12, format!("q {q}: E[xy] = {}", c[3]))?;
            check((d.mean_xy() - xy).abs() <= 1e-12, format!("q {q}: mean_xy"))?;
        }
    }
    let (q, n) = (16.0, 1 << 16);
    let mut rng = CounterRng::new(0xC9);
    let mut coords: Vec<usize> = (0..n).collect();
    coords.shuffle(&mut rng);
    let bad = &coords[..n / 100];
    let (mut hits, mut total) = (0u64, 0u64);
    for rep in 0..20u64 {
        let (x, y) = sample_yes_prime(q, n, bad, mix64(0xC9 + rep)).map_err(|e| e.to_string())?;
        hits += x.inner(&y).map_err(|e| e.to_string())? as u64;
        total += n as u64;
    }
    let (_, hi) = wilson_interval(hits, total, Z95);
    let floor = 0.93 / q;
    check(hi >= floor, format!("E[x_i y_i] upper bound {hi:.5} below {floor:.5}"))?;
    Ok(format!(
        "cells exact for q = 4, 10, 16; Y' mean {:.5} vs {floor:.5}",
        hits as f64 / total as f64
    ))
}

fn c10_reduction() -> Outcome {
    let mut rng = CounterRng::new(0xCA);
    let mut all: Vec<(u8, u8)> = (0..4u8).flat_map(|r1| (0..4u8).map(move |r2| (r1, r2))).collect();
    all.shuffle(&mut rng);
    let strings = &all[..8];
    let mut labels = Vec::new();
    for a in 0..4u8 {
        for b in 0..4u8 {
            let mut xa = Vec::new();
            let mut xb = Vec::new();
            let mut accepted = 0usize;
            for &r in strings {
                let ta = toy_equality_tree(Party::A, a, r).map_err(|e| e.to_string())?;
                let tb = toy_equality_tree(Party::B, b, r).map_err(|e| e.to_string())?;
                accepted += replay(&ta, &tb).map_err(|e| e.to_string())? & 1;
                xa.push(ta.to_vector());
                xb.push(tb.to_vector());
            }
            let red = psr_to_gapip(&xa, &xb).map_err(|e| e.to_string())?;
            check(red.x.len() == 8 * 16, format!("reduced length {}", red.x.len()))?;
            check(red.inner == accepted, format!("({a},{b}): inner {} vs {accepted} accepts", red.inner))?;
            let frac = accepted as f64 / strings.len() as f64;
            let verdict = if frac >= 2.0 / 3.0 {
                Label::Yes
            } else if frac < 1.0 / 3.0 {
                Label::No
            } else {
                Label::Neither
            };
            check(red.label == verdict, format!("({a},{b}): {} vs {verdict}", red.label))?;
            if a == b {
                check(red.label == Label::Yes, format!("({a},{a}) not a yes-instance"))?;
            }
            labels.push(red.label);
        }
    }
    let count = |l: Label| labels.iter().filter(|&&x| x == l).count();
    Ok(format!(
        "16/16 pairs match (yes {}, no {}, neither {})",
        count(Label::Yes),
        count(Label::No),
        count(Label::Neither)
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("correlated source fidelity", c1_source_fidelity),
        ("compression under uncertain priors", c2_compression),
        ("agreement distillation", c3_agreement),
        ("first-k baseline", c4_first_k),
        ("strategy calculus", c5_strategies),
        ("gaussian ISR protocol", c6_gaussian),
        ("sparse one-way PSR protocol", c7_sparse),
        ("influence toolkit", c8_influence),
        ("distribution moments", c9_distributions),
        ("reduction sanity", c10_reduction),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = format!("criterion {:>2}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str()) || id.ends_with(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("{id} PASS  {name} ({secs:.1}s): {msg}"),
            Err(msg) => {
                failed += 1;
                println!("{id} FAIL  {name} ({secs:.1}s): {msg}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}

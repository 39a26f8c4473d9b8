use std::fs::File;
use std::io::{BufWriter, Write};
use std::time::Instant;

use log::info;
use rand::Rng;
use serde_json::{json, Value};

use super::config::{
    AgreeConfig, CompressConfig, EqualityConfig, Experiment, ExperimentConfig, GaussianConfig, InfluenceConfig,
    ModeChoice, SparseConfig, StrategyConfig,
};
use super::emit::{num, Table};
use super::{run_trials, try_run_trials, with_jobs, Proportion};
use crate::agree::{run_agreement, run_first_k};
use crate::compress::{run_compression_experiment, CompressParams, ProbVec};
use crate::error::{Error, Result};
use crate::gapip::{
    calibrate_threshold, classify, equality_demo, gaussian_amplified_trials, gaussian_isr_amplified,
    read_instance, sample_instance, sparse_psr_oneway, sparse_psr_repeated, sparse_repeated_trials,
    sparse_trials, EqualityParams, Gap, GaussianParams, InstanceClass, PairDistribution, SparseParams, ThresholdMode,
    TrialRecord,
};
use crate::mathcore::{
    count_influential, fourier_expand, influence, noise_operator, BooleanFn, Bits,
};
use crate::randsource::{mix64, CorrelatedSource, CounterRng, Party};
use crate::strategies::{acceptance, replay, simulate, StrategyTree, MEMBERSHIP_TOL};

const PRIOR_TAG: u64 = 0x9e1;

/// Runs the experiment on a pool of `config.jobs` threads.
pub fn run(config: &ExperimentConfig) -> Result<Table> {
    with_jobs(config.jobs, || dispatch(config))?
}

/// Runs the experiment and writes the table to `config.out` or stdout.
pub fn run_and_write(config: &ExperimentConfig) -> Result<Table> {
    let table = run(config)?;
    match &config.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            table.write(config.format, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            table.write(config.format, &mut lock)?;
            lock.flush()?;
        }
    }
    Ok(table)
}

fn dispatch(config: &ExperimentConfig) -> Result<Table> {
    let hash = config.config_hash();
    let start = Instant::now();
    let ctx = Ctx {
        trials: config.trials,
        seed: config.seed,
        hash,
        start,
    };
    info!("running {} ({} trials, seed {:#x})", config.experiment.name(), config.trials, config.seed);
    match &config.experiment {
        Experiment::Compress(c) => compress(c, &ctx),
        Experiment::Agree(c) => agree(c, &ctx),
        Experiment::GapipGaussian(c) => gaussian(c, &ctx),
        Experiment::GapipSparse(c) => sparse(c, &ctx),
        Experiment::StrategyCheck(c) => strategy(c, &ctx),
        Experiment::Influence(c) => influence_check(c, &ctx),
        Experiment::Equality(c) => equality(c, &ctx),
    }
}

struct Ctx {
    trials: u64,
    seed: u64,
    hash: String,
    start: Instant,
}

impl Ctx {
    fn wall_ms(&self) -> Value {
        json!(self.start.elapsed().as_millis() as u64)
    }
}

fn compress(cfg: &CompressConfig, ctx: &Ctx) -> Result<Table> {
    let mut table = Table::new(&[
        "n", "entropy", "rho", "eps", "delta", "prior_gap", "kappa", "c", "eps_prime", "trials", "successes",
        "success_rate", "ci_lo", "ci_hi", "failures_empty", "mean_length", "length_bound", "promise_gap",
        "config_hash", "wall_ms",
    ]);
    let params = CompressParams::with_kappa(cfg.rho, cfg.eps, cfg.delta, cfg.prior_gap, cfg.kappa)?;
    let p = match &cfg.p_file {
        Some(path) => ProbVec::from_file(path)?,
        None => ProbVec::geometric_with_entropy(cfg.n, cfg.entropy)?,
    };
    let q = match &cfg.q_file {
        Some(path) => ProbVec::from_file(path)?,
        None => p.perturbed(cfg.prior_gap, mix64(ctx.seed ^ PRIOR_TAG))?,
    };
    if ctx.trials == 0 {
        return Ok(table);
    }
    let r = run_compression_experiment(&p, &q, &params, ctx.trials, ctx.seed)?;
    info!(
        "success {:.4} [{:.4}, {:.4}], mean length {:.1} (bound {:.1})",
        r.success.estimate, r.success.lo, r.success.hi, r.mean_length, r.length_bound
    );
    table.push(vec![
        json!(p.len()),
        num(r.entropy),
        num(cfg.rho),
        num(cfg.eps),
        num(cfg.delta),
        num(cfg.prior_gap),
        num(cfg.kappa),
        json!(r.c),
        num(r.eps_prime),
        json!(r.trials),
        json!(r.successes),
        num(r.success.estimate),
        num(r.success.lo),
        num(r.success.hi),
        json!(r.failures_empty),
        num(r.mean_length),
        num(r.length_bound),
        num(r.promise_gap),
        json!(ctx.hash),
        ctx.wall_ms(),
    ]);
    Ok(table)
}

fn agree(cfg: &AgreeConfig, ctx: &Ctx) -> Result<Table> {
    let mut table = Table::new(&[
        "k", "rho", "eps", "ell", "rate", "ci_lo", "ci_hi", "trials", "method", "radius", "exact_rate",
        "raw_output", "config_hash", "wall_ms",
    ]);
    if cfg.eps.is_empty() {
        return Err(Error::Config("agree needs at least one eps value".into()));
    }
    if ctx.trials == 0 {
        return Ok(table);
    }
    for &eps in &cfg.eps {
        let row = run_agreement(cfg.k, cfg.rho, eps, ctx.trials, ctx.seed, cfg.matrix)?;
        info!("eps {eps}: ell {} rate {:.4} [{:.4}, {:.4}]", row.ell, row.rate, row.ci_lo, row.ci_hi);
        table.push(vec![
            json!(row.k),
            num(row.rho),
            num(row.eps),
            json!(row.ell),
            num(row.rate),
            num(row.ci_lo),
            num(row.ci_hi),
            json!(row.trials),
            json!("syndrome"),
            json!(row.radius),
            num(row.exact_rate),
            json!(row.raw_output),
            json!(ctx.hash),
            ctx.wall_ms(),
        ]);
    }
    if cfg.baseline {
        let p = run_first_k(cfg.k, cfg.rho, ctx.trials, ctx.seed)?;
        let exact = ((1.0 + cfg.rho) / 2.0).powi(cfg.k as i32);
        table.push(vec![
            json!(cfg.k),
            num(cfg.rho),
            Value::Null,
            json!(0),
            num(p.estimate),
            num(p.lo),
            num(p.hi),
            json!(p.trials),
            json!("first-k"),
            json!(0),
            num(exact),
            json!(true),
            json!(ctx.hash),
            ctx.wall_ms(),
        ]);
    }
    Ok(table)
}

const TRIAL_COLUMNS: [&str; 11] =
    ["class", "trial", "label", "sparse_ok", "accept", "ell", "m", "bits", "count", "threshold", "config_hash"];

fn push_trials(table: &mut Table, class: &str, records: &[TrialRecord], threshold: Option<f64>, hash: &str) {
    for (i, r) in records.iter().enumerate() {
        table.push(vec![
            json!(class),
            json!(i),
            json!(r.label.to_string()),
            json!(r.sparse_ok),
            json!(r.accept),
            json!(r.ell),
            json!(r.m),
            json!(r.bits_sent),
            json!(r.count),
            threshold.map_or(Value::Null, num),
            json!(hash),
        ]);
    }
    let p = Proportion::from_flags(records.iter().map(|r| r.accept));
    info!("{class}: accept {:.4} [{:.4}, {:.4}] over {}", p.estimate, p.lo, p.hi, p.trials);
}

fn gap_from(q: f64, c: Option<f64>, s: Option<f64>) -> Result<Gap> {
    let d = Gap::for_q(q)?;
    Gap::new(c.unwrap_or(d.c), s.unwrap_or(d.s))
}

fn gaussian(cfg: &GaussianConfig, ctx: &Ctx) -> Result<Table> {
    let mut table = Table::new(&TRIAL_COLUMNS);
    let gap = gap_from(cfg.q, cfg.c, cfg.s)?;
    let mode = ThresholdMode::Literal { alpha: cfg.alpha };
    let mut params = GaussianParams::new(gap, cfg.t, mode)?.with_backend(cfg.backend);
    CorrelatedSource::new(ctx.seed, cfg.rho, Party::A)?;
    if cfg.reps.is_multiple_of(2) {
        return Err(Error::Config(format!("reps must be odd, got {}", cfg.reps)));
    }
    let fixed = cfg.instance.as_ref().map(|p| read_instance(p)).transpose()?;
    if fixed.is_none() || cfg.mode == ModeChoice::Calibrated {
        // Instance sampling (and calibration) draws from B_Y.
        PairDistribution::yes(cfg.q)?;
    }
    if let Some((x, _)) = &fixed {
        if x.len() != cfg.n {
            info!("instance length {} overrides n = {}", x.len(), cfg.n);
        }
    }
    if ctx.trials == 0 {
        return Ok(table);
    }
    let n = fixed.as_ref().map_or(cfg.n, |(x, _)| x.len());
    let threshold = match cfg.mode {
        ModeChoice::Literal => None,
        ModeChoice::Calibrated => {
            let (q, n) = (cfg.q, n);
            let cal = calibrate_threshold(
                &params,
                cfg.rho,
                cfg.calibration_samples,
                ctx.seed,
                move |s| sample_instance(InstanceClass::Yes, q, n, s).expect("q validated"),
                move |s| sample_instance(InstanceClass::No, q, n, s).expect("q validated"),
            )?;
            info!(
                "calibrated threshold {:.4} (yes mean {:.4}, no mean {:.4})",
                cal.threshold, cal.yes_mean, cal.no_mean
            );
            params = params.with_mode(ThresholdMode::Calibrated { threshold: cal.threshold });
            Some(cal.threshold)
        }
    };
    match fixed {
        Some((x, y)) => {
            let (label, sparse_ok) = classify(&x, &y, cfg.q, gap.c, gap.s)?;
            let m = gap.bucket(x.count_ones(), x.len());
            let records = try_run_trials(ctx.seed, ctx.trials, |_, s| {
                let src = CorrelatedSource::new(s, cfg.rho, Party::A)?;
                let r = gaussian_isr_amplified(&x, &y, &src, &params, cfg.reps)?;
                Ok(TrialRecord {
                    class: InstanceClass::Yes,
                    label,
                    sparse_ok,
                    accept: r.accept,
                    ell: 0,
                    m,
                    bits_sent: r.bits_sent,
                    count: r.accepts as u64,
                })
            })?;
            push_trials(&mut table, "file", &records, threshold, &ctx.hash);
        }
        None => {
            for (k, class) in [InstanceClass::Yes, InstanceClass::No].into_iter().enumerate() {
                let seed = mix64(ctx.seed.wrapping_add(k as u64));
                let records = if cfg.reps == 1 {
                    crate::gapip::gaussian_trials(class, cfg.q, n, cfg.rho, &params, ctx.trials, seed)?
                } else {
                    gaussian_amplified_trials(class, cfg.q, n, cfg.rho, &params, cfg.reps, ctx.trials, seed)?
                };
                push_trials(&mut table, class.name(), &records, threshold, &ctx.hash);
            }
        }
    }
    Ok(table)
}

fn sparse(cfg: &SparseConfig, ctx: &Ctx) -> Result<Table> {
    let mut table = Table::new(&TRIAL_COLUMNS);
    let params = SparseParams::new(gap_from(cfg.q, cfg.c, cfg.s)?, cfg.q)?;
    let reps = match (cfg.repeated, cfg.reps) {
        (_, Some(0)) => return Err(Error::Config("reps must be at least 1".into())),
        (true, r) => Some(r.unwrap_or_else(|| params.default_reps())),
        (false, Some(r)) => Some(r),
        (false, None) => None,
    };
    let fixed = cfg.instance.as_ref().map(|p| read_instance(p)).transpose()?;
    if ctx.trials == 0 {
        return Ok(table);
    }
    info!("sparse protocol: t = {}, reps = {reps:?}", params.t);
    match fixed {
        Some((x, y)) => {
            let (label, sparse_ok) = classify(&x, &y, params.q, params.gap.c, params.gap.s)?;
            let records = try_run_trials(ctx.seed, ctx.trials, |_, s| {
                let src = CorrelatedSource::new(s, 1.0, Party::A)?;
                let (accept, ell, m, bits, count) = match reps {
                    Some(r) => {
                        let rep = sparse_psr_repeated(&x, &y, &src, &params, r)?;
                        (rep.accept, 0, rep.m, params.bits_sent() * r as usize, rep.count)
                    }
                    None => {
                        let idx = src.shared_indices(0, params.t, x.len())?;
                        let a = sparse_psr_oneway(&x, &y, &idx, &params)?;
                        (a.accept, a.ell, a.m, a.bits_sent, a.accept as u64)
                    }
                };
                Ok(TrialRecord {
                    class: InstanceClass::Yes,
                    label,
                    sparse_ok,
                    accept,
                    ell,
                    m,
                    bits_sent: bits,
                    count,
                })
            })?;
            push_trials(&mut table, "file", &records, None, &ctx.hash);
        }
        None => {
            for (k, class) in [InstanceClass::Yes, InstanceClass::No].into_iter().enumerate() {
                let seed = mix64(ctx.seed.wrapping_add(k as u64));
                let records = match reps {
                    Some(r) => sparse_repeated_trials(class, cfg.n, &params, r, ctx.trials, seed)?,
                    None => sparse_trials(class, cfg.n, &params, ctx.trials, seed)?,
                };
                push_trials(&mut table, class.name(), &records, None, &ctx.hash);
            }
        }
    }
    Ok(table)
}

fn strategy(cfg: &StrategyConfig, ctx: &Ctx) -> Result<Table> {
    let mut table = Table::new(&[
        "trial", "k", "deterministic", "inner_product", "simulated", "abs_error", "member_a", "member_b",
        "replay_accept", "config_hash",
    ]);
    // Rejects a bad k before any trial runs, so trials = 0 still validates.
    StrategyTree::deterministic(Party::A, cfg.k, |_, _| false)?;
    let rows = try_run_trials(ctx.seed, ctx.trials, |_, s| -> Result<Vec<Value>> {
        let mut rng = CounterRng::new(s);
        let (a, b) = if cfg.deterministic {
            (
                StrategyTree::random_deterministic(Party::A, cfg.k, &mut rng)?,
                StrategyTree::random_deterministic(Party::B, cfg.k, &mut rng)?,
            )
        } else {
            (
                StrategyTree::random(Party::A, cfg.k, &mut rng)?,
                StrategyTree::random(Party::B, cfg.k, &mut rng)?,
            )
        };
        let (va, vb) = (a.to_vector(), b.to_vector());
        let ip = acceptance(&va, &vb)?;
        // Samples run inside this trial's worker; nested parallelism is fine.
        let sim = simulate(&a, &b, mix64(s), cfg.samples)?;
        let replay_accept = if cfg.deterministic {
            json!(replay(&a, &b)? & 1 == 1)
        } else {
            Value::Null
        };
        Ok(vec![
            Value::Null,
            json!(cfg.k),
            json!(cfg.deterministic),
            num(ip),
            num(sim.acceptance()),
            num((sim.acceptance() - ip).abs()),
            json!(va.is_member(MEMBERSHIP_TOL).member),
            json!(vb.is_member(MEMBERSHIP_TOL).member),
            replay_accept,
            json!(ctx.hash),
        ])
    })?;
    for (i, mut row) in rows.into_iter().enumerate() {
        row[0] = json!(i);
        table.push(row);
    }
    Ok(table)
}

fn influence_check(cfg: &InfluenceConfig, ctx: &Ctx) -> Result<Table> {
    let mut table = Table::new(&[
        "trial", "n", "p", "d", "tau", "eta", "max_influence_gap", "parseval_gap", "noise_gap", "influential",
        "bound", "bound_ok", "config_hash",
    ]);
    // Validates n and p.
    BooleanFn::constant(cfg.n, 0.0, cfg.p)?;
    if !(cfg.tau > 0.0) || cfg.d == 0 || !(0.0..=1.0).contains(&cfg.eta) {
        return Err(Error::Config("influence needs tau > 0, d >= 1 and eta in [0, 1]".into()));
    }
    let rows = try_run_trials(ctx.seed, ctx.trials, |_, s| -> Result<Vec<Value>> {
        let mut rng = CounterRng::new(s);
        let f = BooleanFn::random(cfg.n, cfg.p, -1.0, 1.0, &mut rng)?;
        let fe = fourier_expand(&f);
        let mut inf_gap: f64 = 0.0;
        for i in 1..=cfg.n {
            inf_gap = inf_gap.max((influence(&f, i)? - f.influence_by_variance(i)?).abs());
        }
        let parseval = (fe.squared_mass() - f.second_moment()).abs();
        let direct = noise_operator(&f, cfg.eta)?;
        let spectral = fe.damped(cfg.eta).to_function();
        let noise_gap = direct
            .values()
            .iter()
            .zip(spectral.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let count = count_influential(&f, cfg.tau, cfg.d)?;
        let bound = cfg.d as f64 / cfg.tau;
        Ok(vec![
            Value::Null,
            json!(cfg.n),
            num(cfg.p),
            json!(cfg.d),
            num(cfg.tau),
            num(cfg.eta),
            num(inf_gap),
            num(parseval),
            num(noise_gap),
            json!(count),
            num(bound),
            json!(count as f64 <= bound),
            json!(ctx.hash),
        ])
    })?;
    for (i, mut row) in rows.into_iter().enumerate() {
        row[0] = json!(i);
        table.push(row);
    }
    Ok(table)
}

fn random_message(bits: usize, seed: u64) -> Bits {
    let mut rng = CounterRng::new(seed);
    Bits::from_bools(&(0..bits).map(|_| rng.random::<bool>()).collect::<Vec<_>>())
}

fn equality(cfg: &EqualityConfig, ctx: &Ctx) -> Result<Table> {
    let mut table = Table::new(&[
        "trial", "case", "accept", "accepts", "reps", "inner", "n", "bits_sent", "threshold", "config_hash",
    ]);
    // Validates bits, t and reps; the real threshold comes from calibration.
    EqualityParams::new(cfg.bits, cfg.t, cfg.reps, ThresholdMode::Calibrated { threshold: 0.0 })?;
    CorrelatedSource::new(ctx.seed, cfg.rho, Party::A)?;
    if ctx.trials == 0 {
        return Ok(table);
    }
    let params = EqualityParams::calibrated(cfg.bits, cfg.t, cfg.reps, cfg.rho, cfg.calibration_samples, ctx.seed)?;
    let threshold = match params.gaussian.mode {
        ThresholdMode::Calibrated { threshold } => threshold,
        ThresholdMode::Literal { .. } => f64::NAN,
    };
    let rows = run_trials(ctx.seed, ctx.trials, |_, s| -> Result<[Vec<Value>; 2]> {
        let a = random_message(cfg.bits, s);
        let mut b = a.clone();
        if cfg.bits > 0 {
            let j = CounterRng::new(!s).random_range(0..cfg.bits);
            b.set(j, !b.get(j));
        }
        let src = CorrelatedSource::new(s, cfg.rho, Party::A)?;
        let same = equality_demo(&a, &a, &src, &params)?;
        let diff = equality_demo(&a, &b, &src.for_trial(1), &params)?;
        let row = |case: &str, r: &crate::gapip::EqualityReport| {
            vec![
                Value::Null,
                json!(case),
                json!(r.accept),
                json!(r.accepts),
                json!(r.reps),
                json!(r.inner),
                json!(r.n),
                json!(r.bits_sent),
                num(threshold),
                json!(ctx.hash),
            ]
        };
        Ok([row("equal", &same), row("different", &diff)])
    });
    for (i, pair) in rows.into_iter().enumerate() {
        for mut row in pair? {
            row[0] = json!(i);
            table.push(row);
        }
    }
    Ok(table)
}

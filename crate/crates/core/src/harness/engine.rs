use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::randsource::derive_seed;

/// Runs `trials` independent trials, trial `t` receiving
/// `derive_seed(master, t)`. Results come back in trial order whatever the
/// number of worker threads, so any fold over them is reproducible.
pub fn run_trials<T, F>(master: u64, trials: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, u64) -> T + Sync + Send,
{
    (0..trials)
        .into_par_iter()
        .map(|t| f(t, derive_seed(master, t)))
        .collect()
}

/// Fallible variant of [`run_trials`]; the first error in trial order wins.
pub fn try_run_trials<T, F>(master: u64, trials: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, u64) -> Result<T> + Sync + Send,
{
    run_trials(master, trials, f).into_iter().collect()
}

/// Counts trials whose closure returns `true`.
pub fn count_successes<F>(master: u64, trials: u64, f: F) -> u64
where
    F: Fn(u64, u64) -> bool + Sync + Send,
{
    (0..trials)
        .into_par_iter()
        .filter(|&t| f(t, derive_seed(master, t)))
        .count() as u64
}

/// Runs `op` on a dedicated pool of `jobs` threads (`0` = rayon's default).
pub fn with_jobs<R: Send>(jobs: usize, op: impl FnOnce() -> R + Send) -> Result<R> {
    if jobs == 0 {
        return Ok(op());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} worker threads: {e}")))?;
    Ok(pool.install(op))
}

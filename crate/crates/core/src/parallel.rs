//! Generate-and-test loops whose attempts may run on the rayon pool.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Attempts evaluated per parallel batch.
const BATCH: usize = 256;

/// Random generator for one attempt, derived from the master seed and the
/// 0-based attempt index only.
pub fn attempt_rng(seed: u64, attempt: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(attempt as u64);
    rng
}

/// Evaluate attempts `0, 1, ...` until `done` holds or `budget` attempts were
/// made, returning every evaluated attempt up to and including the first
/// success. Attempt results may depend only on their index, so the parallel
/// path returns exactly what the sequential one does: later attempts of the
/// final batch are discarded, and an error surfaces only if no earlier
/// attempt succeeded.
pub(crate) fn first_success<T, E, F, D>(budget: usize, parallel: bool, eval: F, done: D) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync,
    D: Fn(&T) -> bool + Sync,
{
    let mut out = Vec::new();
    if !parallel {
        for index in 0..budget {
            let result = eval(index)?;
            let stop = done(&result);
            out.push(result);
            if stop {
                break;
            }
        }
        return Ok(out);
    }
    let mut start = 0;
    while start < budget {
        let end = (start + BATCH).min(budget);
        let batch: Vec<Result<T, E>> = (start..end).into_par_iter().map(&eval).collect();
        for result in batch {
            let result = result?;
            let stop = done(&result);
            out.push(result);
            if stop {
                return Ok(out);
            }
        }
        start = end;
    }
    Ok(out)
}

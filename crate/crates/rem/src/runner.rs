//! Parallel execution of a suite on a fixed-size thread pool.

use rayon::prelude::*;
use rem_core::experiment::{ExperimentResult, Suite};

use crate::error::{RemError, Result};

/// `requested`, or the available parallelism.
pub fn worker_count(requested: Option<usize>) -> usize {
    requested
        .filter(|&w| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Runs every experiment of `suite` on `workers` threads. Results come back
/// in canonical (shots, index) order whatever the scheduling.
pub fn run_parallel(suite: &Suite, workers: usize) -> Result<Vec<ExperimentResult>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| RemError::Invalid(format!("thread pool: {e}")))?;
    let jobs = suite.jobs();
    pool.install(|| {
        jobs.par_iter()
            .map(|&(shots, index)| suite.run_experiment(shots, index))
            .collect::<Result<Vec<_>, _>>()
    })
    .map_err(RemError::from)
}

//! Multi-threaded drivers for the embarrassingly parallel parts.
//!
//! Work is split into independent items and collected in input order, so
//! results do not depend on the thread count.

use meritshift_core::evaluation::{assemble, plan_backtest, run_block, BacktestConfig, BacktestReport};
use meritshift_core::models::{FitOptions, Observation};
use meritshift_core::{HourRecord, ModelSpec};
use rayon::prelude::*;

use crate::error::{AppError, Result};

/// `jobs = None` uses one thread per core.
pub fn thread_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    if jobs == Some(0) {
        return Err(AppError::Usage("--jobs must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| AppError::Usage(format!("cannot start worker threads: {e}")))
}

/// Prepares every record for modelling.
pub fn observations(pool: &rayon::ThreadPool, records: &[HourRecord]) -> Result<Vec<Observation>> {
    pool.install(|| records.par_iter().map(Observation::from_record).collect::<Result<_, _>>())
        .map_err(AppError::from)
}

/// Rolling backtest with blocks evaluated concurrently.
pub fn run_backtest(
    pool: &rayon::ThreadPool,
    obs: &[Observation],
    specs: &[ModelSpec],
    cfg: &BacktestConfig,
    opts: &FitOptions,
) -> Result<BacktestReport> {
    let plan = plan_backtest(obs, cfg)?;
    let outcomes = pool.install(|| plan.blocks.par_iter().map(|b| run_block(obs, b, specs, opts)).collect());
    Ok(assemble(obs, &plan, specs, outcomes)?)
}

//! Rolling backtests, error metrics and forecast comparison tests.

mod backtest;
mod dm;
mod metrics;

pub use backtest::{
    assemble, plan_backtest, run_backtest, run_block, BacktestConfig, BacktestPlan, BacktestReport, Block, BlockOutcome,
    CoefficientRecord, DmRow, Exclusion, ModelMetrics, ModelOutcome, ModelSeries, HOURS_PER_DAY,
};
pub use dm::{dm_test, dm_test_with, DmResult, DmVariance, LossNorm};
pub use metrics::{mae, rmse};

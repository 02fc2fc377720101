//! Rolling-window refit and predict.
//!
//! A run is split into a [`BacktestPlan`] of independent blocks, each block
//! is evaluated by [`run_block`], and [`assemble`] reduces the outcomes in
//! block order. Callers may evaluate blocks in any order or in parallel.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::data::{Timestamp, SECONDS_PER_DAY, SECONDS_PER_HOUR};
use crate::error::{Error, Result};
use crate::evaluation::dm::{dm_test, DmResult, LossNorm};
use crate::evaluation::metrics::{mae, rmse};
use crate::models::{describe_failure, FitOptions, Fitter, ModelFit, ModelId, ModelSpec, Observation, Prediction};

pub const HOURS_PER_DAY: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct BacktestConfig {
    pub in_sample_days: usize,
    pub out_sample_days: usize,
    /// Hours between refits.
    pub step: usize,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        BacktestConfig {
            in_sample_days: 365,
            out_sample_days: 364,
            step: 24,
        }
    }
}

impl BacktestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.in_sample_days == 0 || self.out_sample_days == 0 || self.step == 0 {
            return Err(Error::InvalidConfig("backtest window sizes must be positive".into()));
        }
        if !HOURS_PER_DAY.is_multiple_of(self.step) {
            return Err(Error::InvalidConfig(alloc::format!("step {} does not divide 24", self.step)));
        }
        Ok(())
    }
}

/// One refit: train on `train`, predict `test` (index ranges into the
/// observation slice).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub start: Timestamp,
    pub train: Range<usize>,
    pub test: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BacktestPlan {
    /// Out-of-sample days as day numbers since the epoch.
    pub days: Vec<i64>,
    pub blocks: Vec<Block>,
}

fn lower_bound(obs: &[Observation], ts: i64) -> usize {
    obs.partition_point(|o| o.timestamp.0 < ts)
}

pub fn plan_backtest(obs: &[Observation], cfg: &BacktestConfig) -> Result<BacktestPlan> {
    cfg.validate()?;
    let (first, last) = match (obs.first(), obs.last()) {
        (Some(f), Some(l)) => (f.timestamp.day(), l.timestamp.day()),
        _ => return Err(Error::EmptyInput),
    };
    let start_day = first + cfg.in_sample_days as i64;
    let end_day = start_day + cfg.out_sample_days as i64;
    if last < end_day - 1 {
        return Err(Error::InsufficientData(alloc::format!(
            "need {} days from day {first}, data ends on day {last}",
            cfg.in_sample_days + cfg.out_sample_days
        )));
    }
    let window = cfg.in_sample_days as i64 * SECONDS_PER_DAY;
    let step = cfg.step as i64 * SECONDS_PER_HOUR;
    let n_blocks = cfg.out_sample_days * HOURS_PER_DAY / cfg.step;
    let blocks = (0..n_blocks as i64)
        .map(|b| {
            let start = start_day * SECONDS_PER_DAY + b * step;
            Block {
                start: Timestamp(start),
                train: lower_bound(obs, start - window)..lower_bound(obs, start),
                test: lower_bound(obs, start)..lower_bound(obs, start + step),
            }
        })
        .collect();
    Ok(BacktestPlan {
        days: (start_day..end_day).collect(),
        blocks,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutcome {
    pub model: ModelId,
    /// The fit, or why this model was skipped for the block.
    pub fit: core::result::Result<ModelFit, Error>,
    /// Aligned with the block's test range.
    pub predictions: Vec<Prediction>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockOutcome {
    pub start: Timestamp,
    pub models: Vec<ModelOutcome>,
}

pub fn run_block(obs: &[Observation], block: &Block, specs: &[ModelSpec], opts: &FitOptions) -> BlockOutcome {
    let train = &obs[block.train.clone()];
    let test = &obs[block.test.clone()];
    let mut fitter = Fitter::new(train, opts);
    let models = specs
        .iter()
        .map(|spec| {
            let outcome = spec.validate().and_then(|_| fitter.fit(spec.id)).and_then(|f| {
                let p = test.iter().map(|o| f.predict(o)).collect::<Result<Vec<_>>>()?;
                Ok((f, p))
            });
            match outcome {
                Ok((f, p)) => ModelOutcome {
                    model: spec.id,
                    fit: Ok(f),
                    predictions: p,
                },
                Err(e) => ModelOutcome {
                    model: spec.id,
                    fit: Err(e),
                    predictions: Vec::new(),
                },
            }
        })
        .collect();
    BlockOutcome {
        start: block.start,
        models,
    }
}

/// Hourly values of one model over the out-of-sample days.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSeries {
    pub model: ModelId,
    /// `predictions[d][h]`; `None` for missing hours and excluded blocks.
    pub predictions: Vec<[Option<f64>; HOURS_PER_DAY]>,
    pub clamped: Vec<[bool; HOURS_PER_DAY]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelMetrics {
    pub model: ModelId,
    pub mae: f64,
    pub rmse: f64,
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientRecord {
    pub start: Timestamp,
    pub model: ModelId,
    pub beta: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exclusion {
    pub start: Timestamp,
    pub model: ModelId,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DmRow {
    /// Hour of day, 0-based.
    pub hour: usize,
    pub model_a: ModelId,
    pub model_b: ModelId,
    pub norm: LossNorm,
    pub result: core::result::Result<DmResult, Error>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestReport {
    pub days: Vec<i64>,
    /// Observed intraday prices, `actual[d][h]`.
    pub actual: Vec<[Option<f64>; HOURS_PER_DAY]>,
    pub models: Vec<ModelSeries>,
    pub metrics: Vec<ModelMetrics>,
    pub coefficients: Vec<CoefficientRecord>,
    pub exclusions: Vec<Exclusion>,
}

impl BacktestReport {
    pub fn series(&self, model: ModelId) -> Option<&ModelSeries> {
        self.models.iter().find(|s| s.model == model)
    }

    pub fn metrics_for(&self, model: ModelId) -> Option<&ModelMetrics> {
        self.metrics.iter().find(|m| m.model == model)
    }

    /// `actual - predicted`, cell by cell.
    pub fn residuals(&self, model: ModelId) -> Option<Vec<[Option<f64>; HOURS_PER_DAY]>> {
        let s = self.series(model)?;
        Some(
            self.actual
                .iter()
                .zip(&s.predictions)
                .map(|(a, p)| core::array::from_fn(|h| Some(a[h]? - p[h]?)))
                .collect(),
        )
    }

    /// Residuals of all present cells, day-major.
    pub fn flat_residuals(&self, model: ModelId) -> Vec<f64> {
        self.residuals(model)
            .unwrap_or_default()
            .iter()
            .flat_map(|row| row.iter().flatten().copied())
            .collect()
    }

    /// Per-hour comparisons between every pair of models, using the days
    /// on which both have a residual.
    pub fn dm_table(&self, norms: &[LossNorm]) -> Vec<DmRow> {
        let residuals: Vec<_> = self
            .models
            .iter()
            .map(|s| (s.model, self.residuals(s.model).unwrap_or_default()))
            .collect();
        let mut rows = Vec::new();
        for hour in 0..HOURS_PER_DAY {
            for (i, (ma, ra)) in residuals.iter().enumerate() {
                for (mb, rb) in &residuals[i + 1..] {
                    let (a, b): (Vec<f64>, Vec<f64>) = ra
                        .iter()
                        .zip(rb)
                        .filter_map(|(x, y)| Some((x[hour]?, y[hour]?)))
                        .unzip();
                    for &norm in norms {
                        rows.push(DmRow {
                            hour,
                            model_a: *ma,
                            model_b: *mb,
                            norm,
                            result: dm_test(&a, &b, norm),
                        });
                    }
                }
            }
        }
        rows
    }
}

/// Collects block outcomes into a report. `outcomes` must be in plan order.
pub fn assemble(obs: &[Observation], plan: &BacktestPlan, specs: &[ModelSpec], outcomes: Vec<BlockOutcome>) -> Result<BacktestReport> {
    if outcomes.len() != plan.blocks.len() {
        return Err(Error::DimensionMismatch {
            expected: plan.blocks.len(),
            got: outcomes.len(),
        });
    }
    let first_day = plan.days.first().copied().ok_or(Error::EmptyInput)?;
    let n_days = plan.days.len();
    let cell = |ts: Timestamp| ((ts.day() - first_day) as usize, ts.hour_of_day() as usize);

    let mut actual = vec![[None; HOURS_PER_DAY]; n_days];
    for block in &plan.blocks {
        for o in &obs[block.test.clone()] {
            let (d, h) = cell(o.timestamp);
            actual[d][h] = Some(o.p_id);
        }
    }

    let mut models: Vec<ModelSeries> = specs
        .iter()
        .map(|s| ModelSeries {
            model: s.id,
            predictions: vec![[None; HOURS_PER_DAY]; n_days],
            clamped: vec![[false; HOURS_PER_DAY]; n_days],
        })
        .collect();
    let mut coefficients = Vec::new();
    let mut exclusions = Vec::new();

    for (block, outcome) in plan.blocks.iter().zip(outcomes) {
        if block.start != outcome.start {
            return Err(Error::InvalidConfig("block outcomes out of plan order".into()));
        }
        let test = &obs[block.test.clone()];
        for (series, m) in models.iter_mut().zip(outcome.models) {
            match m.fit {
                Ok(fit) => {
                    for (o, p) in test.iter().zip(&m.predictions) {
                        let (d, h) = cell(o.timestamp);
                        series.predictions[d][h] = Some(p.price);
                        series.clamped[d][h] = p.clamped;
                    }
                    if !fit.beta.is_empty() {
                        coefficients.push(CoefficientRecord {
                            start: block.start,
                            model: m.model,
                            beta: fit.indexed_beta().collect(),
                        });
                    }
                }
                Err(e) => exclusions.push(Exclusion {
                    start: block.start,
                    model: m.model,
                    reason: describe_failure(&e),
                }),
            }
        }
    }

    let mut report = BacktestReport {
        days: plan.days.clone(),
        actual,
        models,
        metrics: Vec::new(),
        coefficients,
        exclusions,
    };
    report.metrics = report
        .models
        .iter()
        .map(|s| {
            let e = report.flat_residuals(s.model);
            ModelMetrics {
                model: s.model,
                mae: mae(&e).unwrap_or(f64::NAN),
                rmse: rmse(&e).unwrap_or(f64::NAN),
                cells: e.len(),
            }
        })
        .collect();
    Ok(report)
}

/// Sequential rolling backtest.
pub fn run_backtest(obs: &[Observation], specs: &[ModelSpec], cfg: &BacktestConfig, opts: &FitOptions) -> Result<BacktestReport> {
    let plan = plan_backtest(obs, cfg)?;
    let outcomes = plan.blocks.iter().map(|b| run_block(obs, b, specs, opts)).collect();
    assemble(obs, &plan, specs, outcomes)
}

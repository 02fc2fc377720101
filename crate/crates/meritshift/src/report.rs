//! CSV and JSON renderings of fits, predictions and reports.

use std::fs;
use std::path::Path;

use meritshift_core::curves::decompose_shift;
use meritshift_core::evaluation::{BacktestReport, CoefficientRecord, DmRow, Exclusion, ModelMetrics};
use meritshift_core::models::Prediction;
use meritshift_core::scenario::{simulate_shift_comparison, ScenarioReport, ShiftScenario};
use meritshift_core::{ModelFit, ModelId, Observation, Timestamp};

use crate::error::{AppError, Result};
use crate::io::format_timestamp;

pub const PREDICTIONS_HEADER: [&str; 4] = ["timestamp_utc", "model_id", "p_hat_eur", "clamped"];
pub const BACKTEST_PREDICTIONS_HEADER: [&str; 5] = ["timestamp_utc", "model_id", "p_hat_eur", "clamped", "p_id_eur"];
pub const METRICS_HEADER: [&str; 3] = ["model_id", "mae", "rmse"];
pub const DM_HEADER: [&str; 6] = ["hour", "model_a", "model_b", "phi", "t", "p"];
pub const COEFFICIENTS_HEADER: [&str; 4] = ["date", "model_id", "beta_index", "value"];
pub const EXCLUSIONS_HEADER: [&str; 3] = ["date", "model_id", "reason"];
pub const SCENARIO_HEADER: [&str; 8] = [
    "model_id",
    "technology",
    "gamma",
    "rho",
    "metric",
    "relative_value",
    "baseline_value",
    "clamp_rate",
];
pub const PLOT_HEADER: [&str; 4] = ["figure", "x", "series", "value"];

fn render<F>(header: &[&str], body: F) -> Vec<u8>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    // writing into memory only fails on malformed records, which the
    // fixed-width rows below cannot produce
    w.write_record(header).and_then(|_| body(&mut w)).expect("in-memory csv");
    w.into_inner().expect("in-memory csv")
}

fn num(x: f64) -> String {
    x.to_string()
}

pub fn fit_json(fit: &ModelFit) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(fit).expect("fit serializes");
    bytes.push(b'\n');
    bytes
}

pub fn read_fit(path: &Path) -> Result<ModelFit> {
    let bytes = fs::read(path).map_err(|e| AppError::io(path, e))?;
    let fit: ModelFit = serde_json::from_slice(&bytes).map_err(|e| AppError::format(path, e))?;
    let check = ModelFit::from_beta(fit.spec.id, fit.beta.clone());
    match (fit.spec.id.is_mixture(), check) {
        (false, Err(e)) => Err(AppError::format(path, e)),
        _ => Ok(fit),
    }
}

pub fn predictions_csv<'a>(rows: impl IntoIterator<Item = (Timestamp, ModelId, &'a Prediction)>) -> Vec<u8> {
    render(&PREDICTIONS_HEADER, |w| {
        for (ts, model, p) in rows {
            w.write_record([format_timestamp(ts), model.to_string(), num(p.price), p.clamped.to_string()])?;
        }
        Ok(())
    })
}

/// One row per present cell, model-major then time.
pub fn backtest_predictions_csv(report: &BacktestReport) -> Vec<u8> {
    render(&BACKTEST_PREDICTIONS_HEADER, |w| {
        for s in &report.models {
            for (d, day) in report.days.iter().enumerate() {
                for h in 0..s.predictions[d].len() {
                    let (Some(p), Some(a)) = (s.predictions[d][h], report.actual[d][h]) else {
                        continue;
                    };
                    w.write_record([
                        format_timestamp(Timestamp::from_day_hour(*day, h as u32)),
                        s.model.to_string(),
                        num(p),
                        s.clamped[d][h].to_string(),
                        num(a),
                    ])?;
                }
            }
        }
        Ok(())
    })
}

pub fn metrics_csv(metrics: &[ModelMetrics]) -> Vec<u8> {
    render(&METRICS_HEADER, |w| {
        for m in metrics {
            w.write_record([m.model.to_string(), num(m.mae), num(m.rmse)])?;
        }
        Ok(())
    })
}

/// Hours are 0-based UTC hours of the day. Degenerate comparisons carry
/// NaN statistics.
pub fn dm_csv(rows: &[DmRow]) -> Vec<u8> {
    render(&DM_HEADER, |w| {
        for r in rows {
            let (t, p) = r.result.as_ref().map_or((f64::NAN, f64::NAN), |d| (d.t, d.p_value));
            w.write_record([
                r.hour.to_string(),
                r.model_a.to_string(),
                r.model_b.to_string(),
                r.norm.phi().to_string(),
                num(t),
                num(p),
            ])?;
        }
        Ok(())
    })
}

/// `date` is the refit time of the block.
pub fn coefficients_csv(records: &[CoefficientRecord]) -> Vec<u8> {
    render(&COEFFICIENTS_HEADER, |w| {
        for c in records {
            let date = format_timestamp(c.start);
            for (i, b) in &c.beta {
                w.write_record([date.clone(), c.model.to_string(), i.to_string(), num(*b)])?;
            }
        }
        Ok(())
    })
}

pub fn exclusions_csv(exclusions: &[Exclusion]) -> Vec<u8> {
    render(&EXCLUSIONS_HEADER, |w| {
        for e in exclusions {
            w.write_record([format_timestamp(e.start), e.model.to_string(), e.reason.clone()])?;
        }
        Ok(())
    })
}

pub fn scenario_csv(report: &ScenarioReport) -> Vec<u8> {
    render(&SCENARIO_HEADER, |w| {
        for c in &report.cells {
            w.write_record([
                c.model.to_string(),
                c.technology.to_string(),
                num(c.gamma),
                num(c.rho),
                c.metric.label(),
                num(c.relative_value),
                num(c.baseline_value),
                num(c.clamp_rate),
            ])?;
        }
        Ok(())
    })
}

fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<Vec<String>>> {
    let file = fs::File::open(path).map_err(|e| AppError::io(path, e))?;
    let mut rdr = crate::io::reader(file);
    crate::io::check_header(&mut rdr, path, header)?;
    crate::io::rows(&mut rdr, path, header.len())
        .map(|r| r.map(|(rec, _)| rec.iter().map(str::to_string).collect()))
        .collect()
}

/// Long-format rows `(figure, x, series, value)` for external plotting.
#[derive(Debug, Default)]
pub struct PlotData {
    rows: Vec<[String; 4]>,
}

impl PlotData {
    pub fn push(&mut self, figure: &str, x: String, series: String, value: f64) {
        self.rows.push([figure.to_string(), x, series, num(value)]);
    }

    /// Per-hour DM statistics from a backtest's `dm.csv`, one series per
    /// model pair and loss.
    pub fn dm_by_hour(&mut self, path: &Path) -> Result<()> {
        for r in read_rows(path, &DM_HEADER)? {
            let t = r[4].parse().unwrap_or(f64::NAN);
            self.push("dm_by_hour", r[0].clone(), format!("{}-{} phi={}", r[1], r[2], r[3]), t);
        }
        Ok(())
    }

    /// Coefficient trajectories from a backtest's `coefficients.csv`.
    pub fn coefficient_paths(&mut self, path: &Path) -> Result<()> {
        for r in read_rows(path, &COEFFICIENTS_HEADER)? {
            let v = r[3].parse().unwrap_or(f64::NAN);
            self.push("coefficients", r[0].clone(), format!("{} b{}", r[1], r[2]), v);
        }
        Ok(())
    }

    /// Contribution of each regressor to the curve shift of an `nlm` fit.
    pub fn shift_decomposition(&mut self, fit: &ModelFit, obs: &[Observation]) -> Result<()> {
        for o in obs {
            let x = format_timestamp(o.timestamp);
            for c in decompose_shift(&fit.beta, &o.z)? {
                self.push("shift_decomposition", x.clone(), c.name.to_string(), c.mw);
            }
        }
        Ok(())
    }

    /// Prices an `nlm` fit implies for hypothetical forecast errors on the
    /// curves of one observed hour.
    pub fn shift_scenarios(&mut self, fit: &ModelFit, obs: &Observation, scenarios: &[ShiftScenario]) -> Result<()> {
        let x = format_timestamp(obs.timestamp);
        self.push("shift_scenarios", x.clone(), "observed".to_string(), obs.p_id);
        for (v, p) in obs.market.supply.breakpoints() {
            self.push("supply_curve", num(v), "supply".to_string(), p);
        }
        self.push("demand_volume", x.clone(), "demand".to_string(), obs.market.demand.volume());
        for (s, p) in simulate_shift_comparison(&obs.market, scenarios, fit)? {
            self.push("shift_scenarios", x.clone(), s.label.clone(), p.price);
        }
        Ok(())
    }

    pub fn to_csv(&self) -> Vec<u8> {
        render(&PLOT_HEADER, |w| {
            for r in &self.rows {
                w.write_record(r)?;
            }
            Ok(())
        })
    }
}

//! Added-capacity volatility experiment and hypothetical curve shifts.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::curves::{Market, ShiftedPrice, Side, StepCurve};
use crate::error::{Error, Result};
use crate::features::{scale_features, FeatureVector, ScaleConfig};
use crate::models::{ModelFit, ModelId, Observation};
use crate::stats;

/// Standard-deviation multiplier `sqrt(1 + 2γρ + γ²)` of a forecast error
/// when capacity grows by a fraction `gamma` whose errors correlate with
/// the existing ones at `rho`. Only the radicand is checked here; range
/// checks on `rho` belong to the caller's configuration.
pub fn sd_scaling_factor(gamma: f64, rho: f64) -> Result<f64> {
    if !gamma.is_finite() || !rho.is_finite() {
        return Err(Error::InvalidConfig(format!("invalid scaling gamma={gamma}, rho={rho}")));
    }
    let radicand = 1.0 + (2.0 * gamma * rho + gamma * gamma);
    if radicand < 0.0 {
        return Err(Error::NegativeRadicand { gamma, rho });
    }
    Ok(libm::sqrt(radicand))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Technology {
    Wind,
    Solar,
    #[cfg_attr(feature = "serde", serde(rename = "wind+solar"))]
    WindSolar,
}

impl Technology {
    pub const ALL: [Technology; 3] = [Technology::Wind, Technology::Solar, Technology::WindSolar];

    pub fn as_str(self) -> &'static str {
        match self {
            Technology::Wind => "wind",
            Technology::Solar => "solar",
            Technology::WindSolar => "wind+solar",
        }
    }

    pub fn scale(self, gamma: f64, rho: f64) -> ScaleConfig {
        match self {
            Technology::Wind => ScaleConfig::wind(gamma, rho),
            Technology::Solar => ScaleConfig::solar(gamma, rho),
            Technology::WindSolar => ScaleConfig::both(gamma, rho),
        }
    }
}

impl fmt::Display for Technology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for Technology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "wind" => Ok(Technology::Wind),
            "solar" => Ok(Technology::Solar),
            "wind+solar" | "both" => Ok(Technology::WindSolar),
            other => Err(Error::InvalidConfig(format!("unknown technology `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ScenarioGrid {
    pub gammas: Vec<f64>,
    pub rhos: Vec<f64>,
    pub technologies: Vec<Technology>,
    pub quantiles: Vec<f64>,
}

impl Default for ScenarioGrid {
    fn default() -> Self {
        ScenarioGrid {
            gammas: alloc::vec![0.1, 1.0, 5.0],
            rhos: alloc::vec![0.0, 0.5, 0.8],
            technologies: Technology::ALL.to_vec(),
            quantiles: alloc::vec![0.001, 0.999],
        }
    }
}

impl ScenarioGrid {
    pub fn validate(&self) -> Result<()> {
        if let Some(g) = self.gammas.iter().find(|g| !(**g >= 0.0 && g.is_finite())) {
            return Err(Error::InvalidConfig(format!("gamma {g} must be non-negative")));
        }
        if let Some(r) = self.rhos.iter().find(|r| !(-1.0..=1.0).contains(*r)) {
            return Err(Error::InvalidConfig(format!("rho {r} outside [-1, 1]")));
        }
        if let Some(q) = self.quantiles.iter().find(|q| !(**q > 0.0 && **q < 1.0)) {
            return Err(Error::InvalidConfig(format!("quantile {q} outside (0, 1)")));
        }
        for &g in &self.gammas {
            for &r in &self.rhos {
                sd_scaling_factor(g, r)?;
            }
        }
        Ok(())
    }

    pub fn metrics(&self) -> Vec<Metric> {
        let mut m = alloc::vec![Metric::Sd];
        m.extend(self.quantiles.iter().map(|&q| Metric::Quantile(q)));
        m
    }

    /// Number of report rows for `n_models` models.
    pub fn cell_count(&self, n_models: usize) -> usize {
        n_models * self.technologies.len() * self.gammas.len() * self.rhos.len() * (1 + self.quantiles.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    /// Sample standard deviation of predicted prices.
    Sd,
    /// Quantile of the signed difference `P_ID - P_hat`.
    Quantile(f64),
}

impl Metric {
    /// `sd`, or the level in percent such as `q0.1%`.
    pub fn label(&self) -> String {
        match self {
            Metric::Sd => String::from("sd"),
            Metric::Quantile(q) => format!("q{}%", libm::round(q * 100.0 * 1e6) / 1e6),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioCell {
    pub model: ModelId,
    pub technology: Technology,
    pub gamma: f64,
    pub rho: f64,
    pub metric: Metric,
    pub relative_value: f64,
    pub baseline_value: f64,
    /// Share of hours whose prediction hit a curve end.
    pub clamp_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Baseline {
    pub model: ModelId,
    pub metric: Metric,
    pub value: f64,
    pub clamp_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScenarioReport {
    pub cells: Vec<ScenarioCell>,
    pub baselines: Vec<Baseline>,
}

struct Summary {
    values: Vec<f64>,
    clamp_rate: f64,
}

fn summarize(obs: &[Observation], fit: &ModelFit, cfg: &ScaleConfig, metrics: &[Metric]) -> Result<Summary> {
    let mut predicted = Vec::with_capacity(obs.len());
    let mut diffs = Vec::with_capacity(obs.len());
    let mut clamped = 0usize;
    for o in obs {
        let z = scale_features(&o.z, cfg)?;
        let p = fit.predict_with(&z, o.p_da, &o.market)?;
        clamped += usize::from(p.clamped);
        predicted.push(p.price);
        diffs.push(o.p_id - p.price);
    }
    let values = metrics
        .iter()
        .map(|m| match m {
            Metric::Sd => stats::sample_sd(&predicted),
            Metric::Quantile(q) => stats::quantile(&diffs, *q),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Summary {
        values,
        clamp_rate: clamped as f64 / obs.len() as f64,
    })
}

/// Recomputes every fit's predictions with capacity-scaled regressors for
/// each grid cell and reports metrics relative to the unscaled run of the
/// same model.
pub fn run_scenario(obs: &[Observation], fits: &[ModelFit], grid: &ScenarioGrid) -> Result<ScenarioReport> {
    grid.validate()?;
    if obs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let metrics = grid.metrics();
    let mut report = ScenarioReport::default();
    for fit in fits {
        let base = summarize(obs, fit, &ScaleConfig::default(), &metrics)?;
        for (m, v) in metrics.iter().zip(&base.values) {
            report.baselines.push(Baseline {
                model: fit.spec.id,
                metric: *m,
                value: *v,
                clamp_rate: base.clamp_rate,
            });
        }
        for &technology in &grid.technologies {
            for &gamma in &grid.gammas {
                for &rho in &grid.rhos {
                    let cell = summarize(obs, fit, &technology.scale(gamma, rho), &metrics)?;
                    for ((m, v), b) in metrics.iter().zip(&cell.values).zip(&base.values) {
                        report.cells.push(ScenarioCell {
                            model: fit.spec.id,
                            technology,
                            gamma,
                            rho,
                            metric: *m,
                            relative_value: v / b,
                            baseline_value: *b,
                            clamp_rate: cell.clamp_rate,
                        });
                    }
                }
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftScenario {
    pub label: String,
    pub z: FeatureVector,
}

/// Wind-only and solar-only errors of `±magnitude` MW at fixed actual
/// output, in the order wind-, wind+, solar-, solar+.
pub fn forecast_error_scenarios(magnitude: f64, w_actual: f64, s_actual: f64) -> Vec<ShiftScenario> {
    let mk = |label: String, w_err: f64, s_err: f64| ShiftScenario {
        label,
        z: FeatureVector::from_signed(w_err, s_err, w_actual, s_actual),
    };
    alloc::vec![
        mk(format!("wind -{magnitude}"), -magnitude, 0.0),
        mk(format!("wind +{magnitude}"), magnitude, 0.0),
        mk(format!("solar -{magnitude}"), 0.0, -magnitude),
        mk(format!("solar +{magnitude}"), 0.0, magnitude),
    ]
}

/// Price implied by `fit` for each hypothetical regressor vector on one
/// fixed market.
pub fn simulate_shift_comparison<'a>(
    market: &Market,
    scenarios: &'a [ShiftScenario],
    fit: &ModelFit,
) -> Result<Vec<(&'a ShiftScenario, ShiftedPrice)>> {
    if fit.spec.id != ModelId::Nlm {
        return Err(Error::WrongModel {
            expected: ModelId::Nlm.as_str(),
            got: fit.spec.id.as_str(),
        });
    }
    scenarios
        .iter()
        .map(|s| crate::models::predict_nlm(fit, &s.z, market).map(|p| (s, p)))
        .collect()
}

/// Illustrative merit order in 500 MW steps: steep below 10 GW, nearly flat
/// from 10 to 28 GW, steep again up to 32 GW.
pub fn toy_supply_curve() -> StepCurve {
    let price = |v: f64| -> f64 {
        if v <= 10_000.0 {
            -60.0 + 100.0 * v / 10_000.0
        } else if v <= 28_000.0 {
            40.0 + 12.0 * (v - 10_000.0) / 18_000.0
        } else {
            52.0 + 250.0 * (v - 28_000.0) / 4000.0
        }
    };
    let points = (1..=64).map(|i| {
        let v = 500.0 * i as f64;
        (v, libm::round(price(v) * 100.0) / 100.0)
    });
    StepCurve::new(Side::Supply, points).expect("toy curve is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::InelasticDemand;
    use proptest::prelude::*;

    #[test]
    fn closed_form_points() {
        assert_eq!(sd_scaling_factor(0.0, 0.3).unwrap(), 1.0);
        assert!((sd_scaling_factor(1.0, 0.0).unwrap() - 1.414_213_562_373_095).abs() < 1e-12);
        assert!((sd_scaling_factor(5.0, 0.8).unwrap() - libm::sqrt(34.0)).abs() < 1e-12);
        for g in [0.1, 0.5, 1.0, 2.0, 5.0] {
            assert_eq!(sd_scaling_factor(g, -g / 2.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(sd_scaling_factor(1.0, -1.5), Err(Error::NegativeRadicand { .. })));
        assert!(matches!(sd_scaling_factor(f64::NAN, 0.0), Err(Error::InvalidConfig(_))));
        // with rho in [-1, 1] the radicand is (g + rho)^2 + 1 - rho^2 >= 0
        assert!(sd_scaling_factor(1.0, -1.0).is_ok());
    }

    #[test]
    fn metric_labels() {
        assert_eq!(Metric::Sd.label(), "sd");
        assert_eq!(Metric::Quantile(0.001).label(), "q0.1%");
        assert_eq!(Metric::Quantile(0.999).label(), "q99.9%");
    }

    #[test]
    fn grid_defaults_and_count() {
        let g = ScenarioGrid::default();
        g.validate().unwrap();
        assert_eq!(g.cell_count(2), 2 * 3 * 3 * 3 * 3);
        let bad = ScenarioGrid {
            rhos: alloc::vec![1.2],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn toy_curve_has_larger_move_at_low_demand() {
        let s = toy_supply_curve();
        let change = |d: f64| {
            let m = Market {
                supply: s.clone(),
                demand: InelasticDemand::new(d).unwrap(),
            };
            m.price_with_shift(-2500.0).price - m.price_with_shift(0.0).price
        };
        assert!(change(5000.0) > change(23_000.0));
        assert!(change(23_000.0) > 0.0);
    }

    #[test]
    fn zero_scenario_is_unshifted_price() {
        let m = Market {
            supply: toy_supply_curve(),
            demand: InelasticDemand::new(12_000.0).unwrap(),
        };
        let fit = ModelFit::from_beta(ModelId::Nlm, alloc::vec![0.0, 0.3, 0.2, 0.1, 0.05, 0.0, 0.0]).unwrap();
        let zero = [ShiftScenario {
            label: "zero".into(),
            z: FeatureVector::from_signed(0.0, 0.0, 0.0, 0.0),
        }];
        let out = simulate_shift_comparison(&m, &zero, &fit).unwrap();
        assert_eq!(out[0].1.price, m.price_with_shift(0.0).price);
    }

    proptest! {
        #[test]
        fn monotone_in_rho_and_gamma(g in 0.0f64..10.0, r1 in -1.0f64..1.0, r2 in -1.0f64..1.0, dg in 0.0f64..5.0) {
            let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            prop_assert!(sd_scaling_factor(g, lo).unwrap() <= sd_scaling_factor(g, hi).unwrap());
            let r = hi.abs();
            prop_assert!(sd_scaling_factor(g, r).unwrap() <= sd_scaling_factor(g + dg, r).unwrap());
        }
    }
}

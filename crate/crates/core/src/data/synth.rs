//! Seeded synthetic market generator.
//!
//! Each hour gets a load, wind and solar forecasts with autocorrelated
//! forecast errors, a hockey-stick merit order and a demand curve. The
//! day-ahead price is their intersection; the intraday price comes from a
//! chosen model evaluated at known coefficients plus Gaussian noise.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Dataset, HourRecord, Provenance, Timestamp, ID_PRICE_RANGE};
use crate::curves::{intersect, Side, StepCurve, PRICE_CAP, PRICE_FLOOR};
use crate::error::{Error, Result};
use crate::models::{ModelFit, ModelId, Observation};

/// 2016-01-01 as days since the epoch.
pub const DEFAULT_START_DAY: i64 = 16_801;

const RENEWABLE_STEPS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SynthConfig {
    pub days: usize,
    pub start_day: i64,
    pub supply_steps: usize,
    pub demand_steps: usize,
    /// Model that produces the intraday price.
    pub generator: ModelId,
    pub true_beta: Vec<f64>,
    /// Standard deviation of the Gaussian noise on intraday prices.
    pub noise_sd: f64,
    /// Round intraday prices to cents after adding noise.
    pub round_prices: bool,
    pub wind_mae: f64,
    pub solar_mae: f64,
    pub wind_mean: f64,
    pub wind_sd: f64,
    pub solar_peak: f64,
    pub load_base: f64,
    pub load_swing: f64,
    pub must_run: f64,
    pub conventional_capacity: f64,
    /// Curvature of the expensive end of the merit order.
    pub tail_curvature: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            days: 365,
            start_day: DEFAULT_START_DAY,
            supply_steps: 80,
            demand_steps: 24,
            generator: ModelId::Nlm,
            true_beta: default_true_beta(ModelId::Nlm),
            noise_sd: 1.0,
            round_prices: true,
            wind_mae: 1000.0,
            solar_mae: 330.0,
            wind_mean: 12_000.0,
            wind_sd: 6000.0,
            solar_peak: 15_000.0,
            load_base: 42_000.0,
            load_swing: 22_000.0,
            must_run: 6000.0,
            conventional_capacity: 60_000.0,
            tail_curvature: 6.0,
        }
    }
}

impl SynthConfig {
    /// Config for `generator` with its default coefficients.
    pub fn for_model(generator: ModelId) -> Self {
        SynthConfig {
            generator,
            true_beta: default_true_beta(generator),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::InvalidConfig(msg));
        if self.days == 0 {
            return bad("days must be positive".into());
        }
        if self.supply_steps <= RENEWABLE_STEPS + 1 {
            return bad(format!("supply_steps must exceed {}", RENEWABLE_STEPS + 1));
        }
        if self.demand_steps < 3 {
            return bad("demand_steps must be at least 3".into());
        }
        if self.generator.is_mixture() {
            return bad(format!("{} cannot generate data", self.generator));
        }
        if self.true_beta.len() != self.generator.n_coefficients() {
            return bad(format!(
                "{} needs {} coefficients, got {}",
                self.generator,
                self.generator.n_coefficients(),
                self.true_beta.len()
            ));
        }
        if self.true_beta.iter().any(|b| !b.is_finite()) {
            return bad("coefficients must be finite".into());
        }
        for (name, v) in [
            ("noise_sd", self.noise_sd),
            ("wind_mae", self.wind_mae),
            ("solar_mae", self.solar_mae),
            ("wind_mean", self.wind_mean),
            ("wind_sd", self.wind_sd),
            ("solar_peak", self.solar_peak),
            ("load_swing", self.load_swing),
            ("must_run", self.must_run),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be non-negative, got {v}"));
            }
        }
        for (name, v) in [
            ("load_base", self.load_base),
            ("conventional_capacity", self.conventional_capacity),
            ("tail_curvature", self.tail_curvature),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

/// Coefficients in the range reported for German 2016-2017 data.
pub fn default_true_beta(id: ModelId) -> Vec<f64> {
    let lm1 = [-0.19777, -0.00039, -0.00214, -0.00043, -0.00258, 0.00009, 0.0];
    let lm2 = [1.24052, -0.00040, -0.00209, -0.00015, -0.00273, 0.00005, -0.00002, 0.97019];
    let nlm = [50.0, 0.33663, 0.39478, 0.86325, 0.37144, -0.02659, -0.02590];
    match id {
        ModelId::Naive => Vec::new(),
        ModelId::Lm1 => lm1.to_vec(),
        ModelId::Lm2 => lm2.to_vec(),
        ModelId::Qlm => {
            let mut b = vec![2.46489, 0.00129, -0.00410, -0.00173, -0.00267, 0.00014, 0.00010, 0.86481];
            // the squared day-ahead term is scaled down so that price spikes
            // stay inside the intraday price range
            b.extend([2e-8, -1e-8, 4e-8, 1e-8, -2e-9, 1e-9, 0.0004]);
            b
        }
        ModelId::Nlm => nlm.to_vec(),
        ModelId::Cm => {
            let mut b = vec![0.10064, 0.0, -0.00002, 0.0, -0.00002, 0.0, 0.0, 0.39731];
            b.extend([-0.61, 0.90624, 0.24175, 1.48092, 0.25544, -0.06149, -0.01337, 0.55152]);
            b
        }
        _ => Vec::new(),
    }
}

fn cents(x: f64) -> f64 {
    libm::round(x * 100.0) / 100.0
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Daylight shape, zero outside 06:00-18:00.
fn solar_profile(hour: u32) -> f64 {
    let x = (hour as f64 + 0.5 - 6.0) / 12.0;
    if (0.0..=1.0).contains(&x) {
        libm::pow(libm::sin(PI * x), 1.5)
    } else {
        0.0
    }
}

fn mean_solar_profile() -> f64 {
    (0..24).map(solar_profile).sum::<f64>() / 24.0
}

/// Stationary AR(1) with unit marginal variance.
struct Ar1 {
    phi: f64,
    state: f64,
}

impl Ar1 {
    fn new(phi: f64, rng: &mut ChaCha8Rng) -> Self {
        Ar1 { phi, state: normal(rng) }
    }

    fn next(&mut self, rng: &mut ChaCha8Rng) -> f64 {
        self.state = self.phi * self.state + libm::sqrt(1.0 - self.phi * self.phi) * normal(rng);
        self.state
    }
}

fn supply_curve(cfg: &SynthConfig, renewable: f64, base_price: f64) -> Result<StepCurve> {
    let mut points = Vec::with_capacity(cfg.supply_steps);
    let block = renewable.max(1.0);
    for i in 0..RENEWABLE_STEPS {
        let v = block * (i + 1) as f64 / RENEWABLE_STEPS as f64;
        points.push((v, cents(-30.0 + 10.0 * i as f64)));
    }
    let n = cfg.supply_steps - RENEWABLE_STEPS;
    let kappa = cfg.tail_curvature;
    let mut prev = points.last().map_or(PRICE_FLOOR, |p| p.1);
    for j in 0..n {
        let u = (j + 1) as f64 / n as f64;
        let p = if u <= 0.6 {
            base_price + 30.0 * u / 0.6
        } else {
            let top = base_price + 30.0;
            top + (PRICE_CAP - top) * (libm::exp(kappa * (u - 0.6) / 0.4) - 1.0) / (libm::exp(kappa) - 1.0)
        };
        let p = cents(p).max(prev).min(PRICE_CAP);
        prev = p;
        points.push((block + cfg.conventional_capacity * u, p));
    }
    StepCurve::new(Side::Supply, points)
}

fn demand_curve(cfg: &SynthConfig, load: f64) -> Result<StepCurve> {
    let elastic = cfg.demand_steps - 2;
    let mut points = Vec::with_capacity(cfg.demand_steps);
    points.push((0.9 * load, PRICE_CAP));
    for k in 0..elastic {
        let price = if elastic == 1 {
            150.0
        } else {
            150.0 - 200.0 * k as f64 / (elastic - 1) as f64
        };
        points.push((0.9 * load + 0.05 * load * (k + 1) as f64 / elastic as f64, cents(price)));
    }
    points.push((load, PRICE_FLOOR));
    StepCurve::new(Side::Demand, points)
}

/// Deterministic synthetic dataset for `seed`.
pub fn generate_synthetic(cfg: &SynthConfig, seed: u64) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = ModelFit::from_beta(cfg.generator, cfg.true_beta.clone())?;

    let wind_err_sd = cfg.wind_mae * libm::sqrt(PI / 2.0);
    let solar_err_sd = cfg.solar_mae * libm::sqrt(PI / 2.0) / mean_solar_profile();
    let mut wind = Ar1::new(0.97, &mut rng);
    let mut wind_err = Ar1::new(0.85, &mut rng);
    let mut solar_err = Ar1::new(0.8, &mut rng);

    let mut records = Vec::with_capacity(cfg.days * 24);
    for d in 0..cfg.days {
        let day = cfg.start_day + d as i64;
        let season = libm::cos(2.0 * PI * (day.rem_euclid(365) as f64 - 172.0) / 365.0);
        let solar_peak = cfg.solar_peak * (0.6 + 0.4 * season);
        let cloud: f64 = rng.random_range(0.4..1.0);
        let base_price: f64 = rng.random_range(5.0..25.0);
        let load_level = 2000.0 * normal(&mut rng);
        for hour in 0..24u32 {
            let shape = 0.5 - 0.5 * libm::cos(2.0 * PI * (hour as f64 - 4.0) / 24.0);
            let load = (cfg.load_base + cfg.load_swing * shape + load_level + 500.0 * normal(&mut rng)).max(0.2 * cfg.load_base);

            // errors are drawn independently of the forecasts, which the
            // day-ahead curves are built from
            let w_forecast = (cfg.wind_mean + cfg.wind_sd * wind.next(&mut rng)).max(0.0);
            let w_actual = (w_forecast + wind_err_sd * wind_err.next(&mut rng)).max(0.0);
            let profile = solar_profile(hour);
            let s_forecast = solar_peak * profile * cloud;
            let s_actual = (s_forecast + solar_err_sd * profile * solar_err.next(&mut rng)).max(0.0);

            let hourly_base = base_price + 2.0 * normal(&mut rng);
            let supply = supply_curve(cfg, w_forecast + s_forecast + cfg.must_run, hourly_base)?;
            let demand = demand_curve(cfg, load)?;
            let p_da = intersect(&supply, &demand)?.price;

            let mut record = HourRecord {
                timestamp: Timestamp::from_day_hour(day, hour),
                p_da,
                p_id: p_da,
                w_forecast,
                w_actual,
                s_forecast,
                s_actual,
                supply_curve: supply,
                demand_curve: demand,
            };
            let noise = normal(&mut rng);
            let obs = Observation::from_record(&record)?;
            let mut p_id = truth.predict(&obs)?.price + cfg.noise_sd * noise;
            if cfg.round_prices {
                p_id = cents(p_id);
            }
            if !(ID_PRICE_RANGE.0..=ID_PRICE_RANGE.1).contains(&p_id) {
                return Err(Error::InvalidConfig(format!(
                    "generated intraday price {p_id} out of range; check the true coefficients"
                )));
            }
            record.p_id = p_id;
            records.push(record);
        }
    }
    Dataset::new(records, Provenance::Synthetic { seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::build_features;

    fn small(days: usize) -> SynthConfig {
        SynthConfig {
            days,
            ..Default::default()
        }
    }

    #[test]
    fn same_seed_same_data() {
        let a = generate_synthetic(&small(3), 7).unwrap();
        let b = generate_synthetic(&small(3), 7).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic(&small(3), 8).unwrap();
        assert_ne!(a, c);
        assert_eq!(a.len(), 72);
        assert_eq!(a.provenance(), Provenance::Synthetic { seed: 7 });
    }

    #[test]
    fn noiseless_prices_are_generator_output() {
        let cfg = SynthConfig {
            days: 4,
            noise_sd: 0.0,
            ..Default::default()
        };
        let ds = generate_synthetic(&cfg, 3).unwrap();
        let truth = ModelFit::from_beta(ModelId::Nlm, cfg.true_beta.clone()).unwrap();
        for r in ds.records() {
            let o = Observation::from_record(r).unwrap();
            assert_eq!(r.p_id, truth.predict(&o).unwrap().price);
        }
    }

    #[test]
    fn forecast_error_mae_near_target() {
        let ds = generate_synthetic(&small(365), 11).unwrap();
        let n = ds.len() as f64;
        let (mut w, mut s) = (0.0, 0.0);
        for r in ds.records() {
            let z = build_features(r);
            w += libm::fabs(z.w_err);
            s += libm::fabs(z.s_err);
        }
        let (w, s) = (w / n, s / n);
        assert!((w - 1000.0).abs() < 100.0, "wind MAE {w}");
        assert!((s - 330.0).abs() < 33.0, "solar MAE {s}");
    }

    #[test]
    fn merit_order_is_hockey_stick() {
        let cfg = SynthConfig::default();
        let c = supply_curve(&cfg, 20_000.0, 15.0).unwrap();
        let p = c.prices();
        let n = p.len();
        // flat band then a steep tail
        assert!(p[n / 2] - p[RENEWABLE_STEPS] <= 30.0);
        assert!(p[n - 1] - p[n - 8] > 1000.0);
        assert_eq!(p[n - 1], PRICE_CAP);
    }

    #[test]
    fn rejects_bad_config() {
        let mut cfg = SynthConfig::default();
        cfg.true_beta.pop();
        assert!(matches!(generate_synthetic(&cfg, 1), Err(Error::InvalidConfig(_))));
        let cfg = SynthConfig {
            generator: ModelId::Mnq,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = SynthConfig {
            days: 0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn every_base_model_can_generate() {
        for id in [ModelId::Naive, ModelId::Lm1, ModelId::Lm2, ModelId::Qlm, ModelId::Nlm, ModelId::Cm] {
            let cfg = SynthConfig {
                days: 2,
                ..SynthConfig::for_model(id)
            };
            generate_synthetic(&cfg, 5).unwrap();
        }
    }
}

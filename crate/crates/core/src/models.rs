//! The nine price models as fit/predict pairs.
//!
//! Coefficient vectors follow one global index layout `β0..β22`:
//!
//! | model | indices |
//! |-------|---------|
//! | lm1   | 0..=6 |
//! | lm2   | 0..=7 |
//! | qlm   | 0..=14 |
//! | nlm   | 15..=21 |
//! | cm    | 0..=7, 15..=22 |
//!
//! `naive` has no coefficients; mixtures carry their constituents' fits.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::curves::{shift_unchecked, Market, ShiftedPrice, SHIFT_COEFFICIENTS};
use crate::data::{Dataset, HourRecord, Timestamp};
use crate::error::{Error, Result};
use crate::estimation::{nls_fit, ols_fit, Matrix, NelderMeadOptions};
use crate::features::{build_features, FeatureVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ModelId {
    Naive,
    Lm1,
    Lm2,
    Qlm,
    Nlm,
    Cm,
    Mlq,
    Mnq,
    Mcq,
}

const LM1_INDICES: [usize; 7] = [0, 1, 2, 3, 4, 5, 6];
const LM2_INDICES: [usize; 8] = [0, 1, 2, 3, 4, 5, 6, 7];
const QLM_INDICES: [usize; 15] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14];
const NLM_INDICES: [usize; 7] = [15, 16, 17, 18, 19, 20, 21];
const CM_INDICES: [usize; 16] = [0, 1, 2, 3, 4, 5, 6, 7, 15, 16, 17, 18, 19, 20, 21, 22];

impl ModelId {
    pub const ALL: [ModelId; 9] = [
        ModelId::Naive,
        ModelId::Lm1,
        ModelId::Lm2,
        ModelId::Qlm,
        ModelId::Nlm,
        ModelId::Cm,
        ModelId::Mlq,
        ModelId::Mnq,
        ModelId::Mcq,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelId::Naive => "naive",
            ModelId::Lm1 => "lm1",
            ModelId::Lm2 => "lm2",
            ModelId::Qlm => "qlm",
            ModelId::Nlm => "nlm",
            ModelId::Cm => "cm",
            ModelId::Mlq => "mlq",
            ModelId::Mnq => "mnq",
            ModelId::Mcq => "mcq",
        }
    }

    pub fn is_mixture(self) -> bool {
        self.constituents().is_some()
    }

    pub fn constituents(self) -> Option<(ModelId, ModelId)> {
        match self {
            ModelId::Mlq => Some((ModelId::Lm2, ModelId::Qlm)),
            ModelId::Mnq => Some((ModelId::Qlm, ModelId::Nlm)),
            ModelId::Mcq => Some((ModelId::Cm, ModelId::Qlm)),
            _ => None,
        }
    }

    /// Global β indices of this model's coefficient vector, in storage order.
    pub fn beta_indices(self) -> &'static [usize] {
        match self {
            ModelId::Lm1 => &LM1_INDICES,
            ModelId::Lm2 => &LM2_INDICES,
            ModelId::Qlm => &QLM_INDICES,
            ModelId::Nlm => &NLM_INDICES,
            ModelId::Cm => &CM_INDICES,
            _ => &[],
        }
    }

    pub fn n_coefficients(self) -> usize {
        self.beta_indices().len()
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelId::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidConfig(alloc::format!("unknown model id `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelSpec {
    pub id: ModelId,
    /// Constituents and weights, for mixtures only.
    pub components: Option<[(ModelId, f64); 2]>,
}

impl ModelSpec {
    pub fn new(id: ModelId) -> Self {
        ModelSpec {
            id,
            components: id.constituents().map(|(a, b)| [(a, 0.5), (b, 0.5)]),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.id.is_mixture(), self.components) {
            (false, None) => Ok(()),
            (true, Some([(a, wa), (b, wb)])) => {
                if a.is_mixture() || b.is_mixture() {
                    return Err(Error::InvalidConfig("mixture constituents must be base models".into()));
                }
                if libm::fabs(wa + wb - 1.0) > 1e-12 {
                    return Err(Error::InvalidConfig("mixture weights must sum to 1".into()));
                }
                Ok(())
            }
            _ => Err(Error::InvalidConfig(alloc::format!(
                "components do not match model {}",
                self.id
            ))),
        }
    }
}

impl From<ModelId> for ModelSpec {
    fn from(id: ModelId) -> Self {
        ModelSpec::new(id)
    }
}

/// An hour prepared for modelling: regressors plus the transformed curves.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub timestamp: Timestamp,
    pub p_da: f64,
    pub p_id: f64,
    pub z: FeatureVector,
    pub market: Market,
}

impl Observation {
    pub fn from_record(record: &HourRecord) -> Result<Self> {
        Ok(Observation {
            timestamp: record.timestamp,
            p_da: record.p_da,
            p_id: record.p_id,
            z: build_features(record),
            market: Market::from_wholesale(&record.supply_curve, &record.demand_curve)?,
        })
    }
}

pub fn observations(records: &[HourRecord]) -> Result<Vec<Observation>> {
    records.iter().map(Observation::from_record).collect()
}

pub fn dataset_observations(dataset: &Dataset) -> Result<Vec<Observation>> {
    observations(dataset.records())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WindowSpan {
    pub start: Timestamp,
    pub end: Timestamp,
    pub n_obs: usize,
}

impl WindowSpan {
    pub fn of(train: &[Observation]) -> Option<Self> {
        Some(WindowSpan {
            start: train.first()?.timestamp,
            end: train.last()?.timestamp,
            n_obs: train.len(),
        })
    }
}

#[cfg(feature = "serde")]
fn nan_from_null<'de, D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Vec<f64>, D::Error> {
    let v: Vec<Option<f64>> = serde::Deserialize::deserialize(d)?;
    Ok(v.into_iter().map(|x| x.unwrap_or(f64::NAN)).collect())
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "method", rename_all = "lowercase"))]
pub enum FitDiagnostics {
    None,
    Ols {
        residual_sum_squares: f64,
        n_obs: usize,
        /// NaN (`null` in JSON) when there are no residual degrees of freedom.
        #[cfg_attr(feature = "serde", serde(deserialize_with = "nan_from_null"))]
        se: Vec<f64>,
    },
    Nls {
        objective: f64,
        initial_objective: f64,
        converged: bool,
        iterations: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelFit {
    pub spec: ModelSpec,
    pub beta: Vec<f64>,
    pub fitted_on: Option<WindowSpan>,
    pub diagnostics: FitDiagnostics,
    /// Constituent fits of a mixture.
    pub components: Vec<ModelFit>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub price: f64,
    /// True when a curve shift left the supply curve's volume domain.
    pub clamped: bool,
}

impl From<ShiftedPrice> for Prediction {
    fn from(s: ShiftedPrice) -> Self {
        Prediction {
            price: s.price,
            clamped: s.clamped(),
        }
    }
}

fn check_len(beta: &[f64], expected: usize) -> Result<()> {
    if beta.len() == expected {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected,
            got: beta.len(),
        })
    }
}

/// `b0 + b1..6' Z`
fn intercept_and_features(beta: &[f64], z: &FeatureVector) -> f64 {
    z.as_array().iter().zip(&beta[1..7]).fold(beta[0], |acc, (zk, bk)| acc + bk * zk)
}

fn lm1_price(beta: &[f64], z: &FeatureVector, p_da: f64) -> f64 {
    intercept_and_features(beta, z) + p_da
}

fn lm2_price(beta: &[f64], z: &FeatureVector, p_da: f64) -> f64 {
    intercept_and_features(beta, z) + beta[7] * p_da
}

fn qlm_price(beta: &[f64], z: &FeatureVector, p_da: f64) -> f64 {
    let quadratic = z
        .squared()
        .iter()
        .zip(&beta[8..14])
        .fold(0.0, |acc, (zk, bk)| acc + bk * zk)
        + beta[14] * p_da * p_da;
    lm2_price(beta, z, p_da) + quadratic
}

fn nlm_price(beta: &[f64], z: &FeatureVector, market: &Market) -> ShiftedPrice {
    market.price_with_shift(shift_unchecked(beta, z))
}

fn cm_price(beta: &[f64], z: &FeatureVector, p_da: f64, market: &Market) -> ShiftedPrice {
    let curve = nlm_price(&beta[8..15], z, market);
    ShiftedPrice {
        price: lm2_price(&beta[..8], z, p_da) + beta[15] * curve.price,
        clamp: curve.clamp,
    }
}

/// Price implied by a base model with coefficient vector `beta`.
pub fn base_price(id: ModelId, beta: &[f64], z: &FeatureVector, p_da: f64, market: &Market) -> Result<Prediction> {
    check_len(beta, id.n_coefficients())?;
    let plain = |price| Prediction { price, clamped: false };
    Ok(match id {
        ModelId::Naive => plain(p_da),
        ModelId::Lm1 => plain(lm1_price(beta, z, p_da)),
        ModelId::Lm2 => plain(lm2_price(beta, z, p_da)),
        ModelId::Qlm => plain(qlm_price(beta, z, p_da)),
        ModelId::Nlm => nlm_price(beta, z, market).into(),
        ModelId::Cm => cm_price(beta, z, p_da, market).into(),
        mixture => {
            return Err(Error::InvalidConfig(alloc::format!(
                "{mixture} is a mixture, not a base model"
            )))
        }
    })
}

fn expect_model(fit: &ModelFit, id: ModelId) -> Result<()> {
    if fit.spec.id != id {
        return Err(Error::WrongModel {
            expected: id.as_str(),
            got: fit.spec.id.as_str(),
        });
    }
    check_len(&fit.beta, id.n_coefficients())
}

pub fn predict_naive(record: &HourRecord) -> f64 {
    record.p_da
}

pub fn predict_lm1(fit: &ModelFit, z: &FeatureVector, p_da: f64) -> Result<f64> {
    expect_model(fit, ModelId::Lm1)?;
    Ok(lm1_price(&fit.beta, z, p_da))
}

pub fn predict_lm2(fit: &ModelFit, z: &FeatureVector, p_da: f64) -> Result<f64> {
    expect_model(fit, ModelId::Lm2)?;
    Ok(lm2_price(&fit.beta, z, p_da))
}

pub fn predict_qlm(fit: &ModelFit, z: &FeatureVector, p_da: f64) -> Result<f64> {
    expect_model(fit, ModelId::Qlm)?;
    Ok(qlm_price(&fit.beta, z, p_da))
}

pub fn predict_nlm(fit: &ModelFit, z: &FeatureVector, market: &Market) -> Result<ShiftedPrice> {
    expect_model(fit, ModelId::Nlm)?;
    Ok(nlm_price(&fit.beta, z, market))
}

pub fn predict_cm(fit: &ModelFit, z: &FeatureVector, p_da: f64, market: &Market) -> Result<ShiftedPrice> {
    expect_model(fit, ModelId::Cm)?;
    Ok(cm_price(&fit.beta, z, p_da, market))
}

impl ModelFit {
    /// A fit built from known coefficients, e.g. a generating process.
    pub fn from_beta(id: ModelId, beta: Vec<f64>) -> Result<Self> {
        if id.is_mixture() {
            return Err(Error::InvalidConfig(alloc::format!("{id} needs constituent fits")));
        }
        check_len(&beta, id.n_coefficients())?;
        Ok(ModelFit {
            spec: ModelSpec::new(id),
            beta,
            fitted_on: None,
            diagnostics: FitDiagnostics::None,
            components: Vec::new(),
        })
    }

    pub fn mixture(spec: ModelSpec, components: Vec<ModelFit>) -> Result<Self> {
        spec.validate()?;
        let fit = ModelFit {
            spec,
            beta: Vec::new(),
            fitted_on: components.first().and_then(|c| c.fitted_on),
            diagnostics: FitDiagnostics::None,
            components,
        };
        if let Some([(a, _), (b, _)]) = spec.components {
            fit.component(a)?;
            fit.component(b)?;
        }
        Ok(fit)
    }

    fn component(&self, id: ModelId) -> Result<&ModelFit> {
        self.components
            .iter()
            .find(|c| c.spec.id == id)
            .ok_or(Error::MissingConstituent(id.as_str()))
    }

    /// Pairs of (global β index, value).
    pub fn indexed_beta(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.spec.id.beta_indices().iter().copied().zip(self.beta.iter().copied())
    }

    pub fn predict(&self, obs: &Observation) -> Result<Prediction> {
        self.predict_with(&obs.z, obs.p_da, &obs.market)
    }

    /// Prediction for an hour with its regressors replaced by `z`.
    pub fn predict_with(&self, z: &FeatureVector, p_da: f64, market: &Market) -> Result<Prediction> {
        match self.spec.components {
            None => base_price(self.spec.id, &self.beta, z, p_da, market),
            Some(parts) => predict_mixture(self, parts, z, p_da, market),
        }
    }
}

fn predict_mixture(
    fit: &ModelFit,
    parts: [(ModelId, f64); 2],
    z: &FeatureVector,
    p_da: f64,
    market: &Market,
) -> Result<Prediction> {
    let [(a, wa), (b, wb)] = parts;
    let pa = fit.component(a)?.predict_with(z, p_da, market)?;
    let pb = fit.component(b)?.predict_with(z, p_da, market)?;
    Ok(Prediction {
        price: wa * pa.price + wb * pb.price,
        clamped: pa.clamped || pb.clamped,
    })
}

/// Knobs for the curve-shift estimators.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct FitOptions {
    pub simplex: NelderMeadOptions,
    /// Initial simplex offsets are sized so each coordinate moves the
    /// average shift by about this many MW.
    pub simplex_shift_mw: f64,
    /// Same idea for the linear part of `cm`, in EUR/MWh.
    pub simplex_price_eur: f64,
    /// Also try a start derived from the shifts implied by observed prices,
    /// keeping it only if it beats the zero shift.
    pub inverse_curve_start: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            simplex: NelderMeadOptions {
                restarts: 8,
                ..Default::default()
            },
            simplex_shift_mw: 500.0,
            simplex_price_eur: 1.0,
            inverse_curve_start: true,
        }
    }
}

const FEATURE_COLUMNS: [&str; 6] = FeatureVector::NAMES;
const QUADRATIC_COLUMNS: [&str; 6] = ["w_err_neg^2", "w_err^2", "s_err_neg^2", "s_err^2", "w_actual^2", "s_actual^2"];

fn design(train: &[Observation], with_p_da: bool, quadratic: bool) -> (Matrix, Vec<&'static str>) {
    let mut names = vec!["intercept"];
    names.extend(FEATURE_COLUMNS);
    if with_p_da {
        names.push("p_da");
    }
    if quadratic {
        names.extend(QUADRATIC_COLUMNS);
        names.push("p_da^2");
    }
    let mut m = Matrix::zeros(train.len(), names.len());
    for (i, o) in train.iter().enumerate() {
        m.set(i, 0, 1.0);
        for (k, zk) in o.z.as_array().iter().enumerate() {
            m.set(i, 1 + k, *zk);
        }
        if with_p_da {
            m.set(i, 7, o.p_da);
        }
        if quadratic {
            for (k, zk) in o.z.squared().iter().enumerate() {
                m.set(i, 8 + k, *zk);
            }
            m.set(i, 14, o.p_da * o.p_da);
        }
    }
    (m, names)
}

fn fit_linear(id: ModelId, train: &[Observation]) -> Result<ModelFit> {
    let (x, names, y): (Matrix, Vec<&str>, Vec<f64>) = match id {
        ModelId::Lm1 => {
            let (x, n) = design(train, false, false);
            (x, n, train.iter().map(|o| o.p_id - o.p_da).collect())
        }
        ModelId::Lm2 => {
            let (x, n) = design(train, true, false);
            (x, n, train.iter().map(|o| o.p_id).collect())
        }
        ModelId::Qlm => {
            let (x, n) = design(train, true, true);
            (x, n, train.iter().map(|o| o.p_id).collect())
        }
        _ => unreachable!("not a linear model"),
    };
    let ols = ols_fit(&x, &y).map_err(|e| match e {
        Error::RankDeficient { column, .. } => Error::RankDeficient {
            column,
            name: names[column].to_string(),
        },
        other => other,
    })?;
    Ok(ModelFit {
        spec: ModelSpec::new(id),
        beta: ols.beta,
        fitted_on: WindowSpan::of(train),
        diagnostics: FitDiagnostics::Ols {
            residual_sum_squares: ols.residual_sum_squares,
            n_obs: ols.n_obs,
            se: ols.se,
        },
        components: Vec::new(),
    })
}

fn mean_abs_features(train: &[Observation]) -> [f64; 6] {
    let mut acc = [0.0; 6];
    for o in train {
        for (a, z) in acc.iter_mut().zip(o.z.as_array()) {
            *a += libm::fabs(z);
        }
    }
    acc.map(|a| a / train.len().max(1) as f64)
}

fn per_unit(target: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        target / scale
    } else {
        0.1
    }
}

fn shift_steps(opts: &FitOptions, magnitudes: &[f64; 6]) -> Vec<f64> {
    let mut steps = vec![opts.simplex_shift_mw];
    steps.extend(magnitudes.iter().map(|&m| per_unit(opts.simplex_shift_mw, m)));
    steps
}

fn sum_squared_errors(train: &[Observation], price: impl Fn(&Observation) -> f64) -> f64 {
    train
        .iter()
        .map(|o| {
            let e = o.p_id - price(o);
            e * e
        })
        .sum()
}

/// Shifts consistent with the observed intraday price on this hour's
/// supply curve: any shift in `[lo, hi)` reproduces it exactly. Prices that
/// are not on the curve give the single shift where it is crossed.
fn implied_shift(o: &Observation) -> (f64, f64) {
    let v = o.market.demand.volume();
    let s = &o.market.supply;
    (v - s.volume_at(o.p_id), v - s.volume_strict(o.p_id))
}

fn interval_miss(b: &[f64], train: &[Observation], bounds: &[(f64, f64)]) -> f64 {
    train
        .iter()
        .zip(bounds)
        .map(|(o, &(lo, hi))| {
            let s = shift_unchecked(b, &o.z);
            let miss = if s < lo {
                lo - s
            } else if s > hi {
                s - hi
            } else {
                0.0
            };
            miss * miss
        })
        .sum()
}

/// Starting point from the implied shifts: least squares on interval
/// midpoints, refined by a simplex search on the squared distance of each
/// fitted shift to its interval.
fn inverse_curve_start(train: &[Observation], simplex: &NelderMeadOptions) -> Result<Vec<f64>> {
    let bounds: Vec<(f64, f64)> = train.iter().map(implied_shift).collect();
    let (x, _) = design(train, false, false);
    let mid: Vec<f64> = bounds.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();
    let start = match ols_fit(&x, &mid) {
        Ok(r) => r.beta,
        Err(_) => vec![0.0; SHIFT_COEFFICIENTS],
    };
    let res = nls_fit(|b: &[f64]| interval_miss(b, train, &bounds), &start, simplex)?;
    Ok(res.beta)
}

fn fit_curve_shift(train: &[Observation], opts: &FitOptions) -> Result<ModelFit> {
    if train.is_empty() {
        return Err(Error::EmptyInput);
    }
    let magnitudes = mean_abs_features(train);
    let simplex = NelderMeadOptions {
        initial_step: shift_steps(opts, &magnitudes),
        ..opts.simplex.clone()
    };
    let objective = |b: &[f64]| sum_squared_errors(train, |o| nlm_price(b, &o.z, &o.market).price);
    let zero = vec![0.0; SHIFT_COEFFICIENTS];
    let mut start = zero.clone();
    if opts.inverse_curve_start {
        let candidate = inverse_curve_start(train, &simplex)?;
        if objective(&candidate) < objective(&zero) {
            start = candidate;
        }
    }
    let res = nls_fit(objective, &start, &simplex)?;
    Ok(ModelFit {
        spec: ModelSpec::new(ModelId::Nlm),
        beta: res.beta,
        fitted_on: WindowSpan::of(train),
        diagnostics: FitDiagnostics::Nls {
            objective: res.objective,
            initial_objective: res.initial_objective,
            converged: res.converged,
            iterations: res.iterations,
        },
        components: Vec::new(),
    })
}

/// Joint 16-parameter fit of `cm`, warm-started from separate `lm2` and `nlm`
/// fits with `β22 = 0.5`. The linear block is tried both as fitted and
/// halved, along with the pure curve model (`β0:7 = 0`, `β22 = 1`); the
/// search starts from whichever has the lowest objective.
fn fit_combined(train: &[Observation], lm2: &ModelFit, nlm: &ModelFit, opts: &FitOptions) -> Result<ModelFit> {
    if train.is_empty() {
        return Err(Error::EmptyInput);
    }
    let start_from = |linear_scale: f64, weight: f64| {
        let mut b: Vec<f64> = lm2.beta.iter().map(|x| linear_scale * x).collect();
        b.extend(&nlm.beta);
        b.push(weight);
        b
    };
    let objective = |b: &[f64]| sum_squared_errors(train, |o| cm_price(b, &o.z, o.p_da, &o.market).price);
    let start = [start_from(1.0, 0.5), start_from(0.5, 0.5), start_from(0.0, 1.0)]
        .into_iter()
        .map(|b| (objective(&b), b))
        .filter(|(f, _)| f.is_finite())
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, b)| b)
        .ok_or(Error::NonFiniteObjective)?;

    let magnitudes = mean_abs_features(train);
    let mean_p_da = train.iter().map(|o| libm::fabs(o.p_da)).sum::<f64>() / train.len() as f64;
    let mut steps = vec![opts.simplex_price_eur];
    steps.extend(magnitudes.iter().map(|&m| per_unit(opts.simplex_price_eur, m)));
    steps.push(per_unit(opts.simplex_price_eur, mean_p_da));
    steps.extend(shift_steps(opts, &magnitudes));
    steps.push(0.1);

    let simplex = NelderMeadOptions {
        initial_step: steps,
        ..opts.simplex.clone()
    };
    let res = nls_fit(objective, &start, &simplex)?;
    Ok(ModelFit {
        spec: ModelSpec::new(ModelId::Cm),
        beta: res.beta,
        fitted_on: WindowSpan::of(train),
        diagnostics: FitDiagnostics::Nls {
            objective: res.objective,
            initial_objective: res.initial_objective,
            converged: res.converged,
            iterations: res.iterations,
        },
        components: Vec::new(),
    })
}

/// Fits a set of models on one training window, sharing constituent fits
/// between mixtures and `cm`.
pub struct Fitter<'a> {
    train: &'a [Observation],
    opts: &'a FitOptions,
    done: BTreeMap<ModelId, Result<ModelFit>>,
}

impl<'a> Fitter<'a> {
    pub fn new(train: &'a [Observation], opts: &'a FitOptions) -> Self {
        Fitter {
            train,
            opts,
            done: BTreeMap::new(),
        }
    }

    pub fn fit(&mut self, id: ModelId) -> Result<ModelFit> {
        if let Some(r) = self.done.get(&id) {
            return r.clone();
        }
        let result = self.fit_uncached(id);
        self.done.insert(id, result.clone());
        result
    }

    fn fit_uncached(&mut self, id: ModelId) -> Result<ModelFit> {
        if self.train.is_empty() {
            return Err(Error::EmptyInput);
        }
        match id {
            ModelId::Naive => Ok(ModelFit {
                spec: ModelSpec::new(id),
                beta: Vec::new(),
                fitted_on: WindowSpan::of(self.train),
                diagnostics: FitDiagnostics::None,
                components: Vec::new(),
            }),
            ModelId::Lm1 | ModelId::Lm2 | ModelId::Qlm => fit_linear(id, self.train),
            ModelId::Nlm => fit_curve_shift(self.train, self.opts),
            ModelId::Cm => {
                let lm2 = self.fit(ModelId::Lm2)?;
                let nlm = self.fit(ModelId::Nlm)?;
                fit_combined(self.train, &lm2, &nlm, self.opts)
            }
            mixture => {
                let (a, b) = mixture.constituents().expect("mixture");
                let fa = self.fit(a)?;
                let fb = self.fit(b)?;
                ModelFit::mixture(ModelSpec::new(mixture), vec![fa, fb])
            }
        }
    }
}

pub fn fit_model(spec: &ModelSpec, train: &[Observation], opts: &FitOptions) -> Result<ModelFit> {
    spec.validate()?;
    Fitter::new(train, opts).fit(spec.id)
}

/// Short description of a fit failure for logs and reports.
pub fn describe_failure(err: &Error) -> String {
    err.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{Side, StepCurve};
    use proptest::prelude::*;

    fn market() -> Market {
        let s = StepCurve::new(
            Side::Supply,
            [(2000.0, -5.0), (5000.0, 20.0), (8000.0, 35.0), (10_000.0, 90.0), (12_000.0, 400.0)],
        )
        .unwrap();
        let d = StepCurve::new(Side::Demand, [(7000.0, 3000.0), (8000.0, 50.0), (9000.0, -500.0)]).unwrap();
        Market::from_wholesale(&s, &d).unwrap()
    }

    fn obs(z: FeatureVector, p_da: f64) -> Observation {
        Observation {
            timestamp: Timestamp(0),
            p_da,
            p_id: 0.0,
            z,
            market: market(),
        }
    }

    fn z() -> FeatureVector {
        FeatureVector::from_errors(1500.0, 700.0, 2000.0, 2600.0)
    }

    #[test]
    fn parse_and_layout() {
        assert_eq!("MCQ".parse::<ModelId>().unwrap(), ModelId::Mcq);
        assert!("qcm".parse::<ModelId>().is_err());
        assert_eq!(ModelId::Cm.n_coefficients(), 16);
        assert_eq!(ModelId::Qlm.n_coefficients(), 15);
        assert_eq!(ModelId::Naive.n_coefficients(), 0);
        for id in ModelId::ALL {
            ModelSpec::new(id).validate().unwrap();
        }
        let bad = ModelSpec {
            id: ModelId::Mnq,
            components: Some([(ModelId::Qlm, 0.7), (ModelId::Nlm, 0.7)]),
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn naive_returns_day_ahead() {
        let o = obs(z(), 51.25);
        let fit = Fitter::new(core::slice::from_ref(&o), &FitOptions::default()).fit(ModelId::Naive).unwrap();
        assert!(fit.beta.is_empty());
        assert_eq!(fit.predict(&o).unwrap().price, 51.25);
        assert_eq!(fit.predict(&obs(z(), 0.0)).unwrap().price, 0.0);
    }

    #[test]
    fn lm1_examples() {
        let zero = ModelFit::from_beta(ModelId::Lm1, vec![0.0; 7]).unwrap();
        assert_eq!(predict_lm1(&zero, &z(), 42.0).unwrap(), 42.0);
        let mut b = vec![0.0; 7];
        b[0] = 1.0;
        let one = ModelFit::from_beta(ModelId::Lm1, b).unwrap();
        assert_eq!(predict_lm1(&one, &z(), 10.0).unwrap(), 11.0);
        assert!(predict_lm2(&one, &z(), 10.0).is_err());
    }

    #[test]
    fn lm2_constant() {
        let mut b = vec![0.0; 8];
        b[0] = 17.5;
        let fit = ModelFit::from_beta(ModelId::Lm2, b).unwrap();
        assert_eq!(predict_lm2(&fit, &z(), 99.0).unwrap(), 17.5);
    }

    #[test]
    fn qlm_entrywise_square() {
        let mut b = vec![0.0; 15];
        b[9] = 1.0;
        let fit = ModelFit::from_beta(ModelId::Qlm, b).unwrap();
        let z = FeatureVector::from_array_unchecked([0.0, 2.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(predict_qlm(&fit, &z, 30.0).unwrap(), 4.0);
    }

    #[test]
    fn zero_shift_is_transformed_equilibrium() {
        let m = market();
        let fit = ModelFit::from_beta(ModelId::Nlm, vec![0.0; 7]).unwrap();
        let p = predict_nlm(&fit, &z(), &m).unwrap();
        assert_eq!(p.price, m.price_with_shift(0.0).price);
        assert!(!p.clamped());
    }

    #[test]
    fn negative_wind_error_raises_price_under_positive_coefficients() {
        let m = market();
        let fit = ModelFit::from_beta(ModelId::Nlm, vec![0.0, 0.3, 0.4, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let short = FeatureVector::from_signed(-4000.0, 0.0, 0.0, 0.0);
        let base = predict_nlm(&ModelFit::from_beta(ModelId::Nlm, vec![0.0; 7]).unwrap(), &short, &m).unwrap();
        assert!(predict_nlm(&fit, &short, &m).unwrap().price >= base.price);
    }

    #[test]
    fn nlm_matches_shifted_breakpoints() {
        // brute force: move every breakpoint right by the shift and intersect again
        let m = market();
        let beta = [120.0, 0.2, 0.35, 0.1, 0.5, -0.02, -0.01];
        let zz = z();
        let shift: f64 = beta[0] + beta[1..].iter().zip(zz.as_array()).map(|(b, x)| b * x).sum::<f64>();
        let moved: Vec<(f64, f64)> = m
            .supply
            .breakpoints()
            .map(|(v, p)| (v + shift, p))
            .filter(|(v, _)| *v > 0.0)
            .collect();
        let moved = StepCurve::new(Side::Supply, moved).unwrap();
        let vertical = m.demand.to_curve(3000.0).unwrap();
        let expected = crate::curves::intersect(&moved, &vertical).unwrap().price;
        let fit = ModelFit::from_beta(ModelId::Nlm, beta.to_vec()).unwrap();
        assert_eq!(predict_nlm(&fit, &zz, &m).unwrap().price, expected);
    }

    #[test]
    fn mixture_needs_both_constituents() {
        let qlm = ModelFit::from_beta(ModelId::Qlm, vec![0.0; 15]).unwrap();
        assert_eq!(
            ModelFit::mixture(ModelSpec::new(ModelId::Mnq), vec![qlm]),
            Err(Error::MissingConstituent("nlm"))
        );
    }

    #[test]
    fn mixture_averages() {
        let mut a = vec![0.0; 8];
        a[0] = 10.0;
        let mut b = vec![0.0; 15];
        b[0] = 20.0;
        let lm2 = ModelFit::from_beta(ModelId::Lm2, a).unwrap();
        let qlm = ModelFit::from_beta(ModelId::Qlm, b).unwrap();
        let mix = ModelFit::mixture(ModelSpec::new(ModelId::Mlq), vec![lm2, qlm]).unwrap();
        assert_eq!(mix.predict(&obs(z(), 0.0)).unwrap().price, 15.0);
    }

    prop_compose! {
        fn arb_z()(wf in 0.0f64..20_000.0, wa in 0.0f64..20_000.0, sf in 0.0f64..10_000.0, sa in 0.0f64..10_000.0) -> FeatureVector {
            FeatureVector::from_errors(wf, wa, sf, sa)
        }
    }

    proptest! {
        #[test]
        fn nesting_chain(
            lin in prop::collection::vec(-2.0f64..2.0, 8),
            shift in prop::collection::vec(-0.5f64..0.5, 7),
            quad in prop::collection::vec(-1e-4f64..1e-4, 7),
            z in arb_z(),
            p_da in -50.0f64..300.0,
        ) {
            let o = obs(z, p_da);
            let mut b1 = lin.clone();
            b1[7] = 1.0;
            let lm1 = ModelFit::from_beta(ModelId::Lm1, b1[..7].to_vec()).unwrap();
            let lm2_unit = ModelFit::from_beta(ModelId::Lm2, b1).unwrap();
            prop_assert_eq!(lm1.predict(&o).unwrap().price, lm2_unit.predict(&o).unwrap().price);

            let lm2 = ModelFit::from_beta(ModelId::Lm2, lin.clone()).unwrap();
            let mut q = lin.clone();
            q.extend([0.0; 7]);
            let qlm = ModelFit::from_beta(ModelId::Qlm, q).unwrap();
            prop_assert_eq!(lm2.predict(&o).unwrap().price, qlm.predict(&o).unwrap().price);

            let mut c = lin.clone();
            c.extend(&shift);
            c.push(0.0);
            let cm = ModelFit::from_beta(ModelId::Cm, c).unwrap();
            prop_assert_eq!(lm2.predict(&o).unwrap().price, cm.predict(&o).unwrap().price);

            let shift_mw: Vec<f64> = shift.iter().enumerate().map(|(i, s)| if i == 0 { s * 1000.0 } else { *s }).collect();
            let nlm = ModelFit::from_beta(ModelId::Nlm, shift_mw.clone()).unwrap();
            let mut c = vec![0.0; 8];
            c.extend(&shift_mw);
            c.push(1.0);
            let cm = ModelFit::from_beta(ModelId::Cm, c).unwrap();
            prop_assert_eq!(nlm.predict(&o).unwrap().price, cm.predict(&o).unwrap().price);

            let mut qfull = lin.clone();
            qfull.extend(&quad);
            let qlm = ModelFit::from_beta(ModelId::Qlm, qfull).unwrap();
            let mix = ModelFit::mixture(ModelSpec::new(ModelId::Mnq), vec![qlm.clone(), nlm.clone()]).unwrap();
            let expected = 0.5 * qlm.predict(&o).unwrap().price + 0.5 * nlm.predict(&o).unwrap().price;
            prop_assert_eq!(mix.predict(&o).unwrap().price, expected);
        }

        #[test]
        fn manual_dot_products(b in prop::collection::vec(-3.0f64..3.0, 15), z in arb_z(), p_da in -50.0f64..300.0) {
            let a = z.as_array();
            let lin: f64 = b[0] + (0..6).map(|k| b[1 + k] * a[k]).sum::<f64>();
            let lm1 = ModelFit::from_beta(ModelId::Lm1, b[..7].to_vec()).unwrap();
            prop_assert!((predict_lm1(&lm1, &z, p_da).unwrap() - (lin + p_da)).abs() < 1e-9 * (1.0 + lin.abs()));
            let lm2 = ModelFit::from_beta(ModelId::Lm2, b[..8].to_vec()).unwrap();
            prop_assert!((predict_lm2(&lm2, &z, p_da).unwrap() - (lin + b[7] * p_da)).abs() < 1e-9 * (1.0 + lin.abs()));
            let quad: f64 = (0..6).map(|k| b[8 + k] * a[k] * a[k]).sum::<f64>() + b[14] * p_da * p_da;
            let qlm = ModelFit::from_beta(ModelId::Qlm, b.clone()).unwrap();
            let expected = lin + b[7] * p_da + quad;
            prop_assert!((predict_qlm(&qlm, &z, p_da).unwrap() - expected).abs() < 1e-9 * (1.0 + expected.abs()));
        }

        #[test]
        fn cm_composes_linear_and_curve_parts(b in prop::collection::vec(-1.0f64..1.0, 16), z in arb_z(), p_da in -50.0f64..300.0) {
            let m = market();
            let cm = ModelFit::from_beta(ModelId::Cm, b.clone()).unwrap();
            let lm2 = ModelFit::from_beta(ModelId::Lm2, b[..8].to_vec()).unwrap();
            let nlm = ModelFit::from_beta(ModelId::Nlm, b[8..15].to_vec()).unwrap();
            let expected = predict_lm2(&lm2, &z, p_da).unwrap() + b[15] * predict_nlm(&nlm, &z, &m).unwrap().price;
            prop_assert_eq!(predict_cm(&cm, &z, p_da, &m).unwrap().price, expected);
        }

        #[test]
        fn nlm_monotone_in_positive_coefficient_features(
            b in prop::collection::vec(0.0f64..1.0, 7),
            z in arb_z(),
            k in 0usize..6,
            bump in 0.0f64..5000.0,
        ) {
            let m = market();
            let fit = ModelFit::from_beta(ModelId::Nlm, b).unwrap();
            let mut a = z.as_array();
            let before = predict_nlm(&fit, &FeatureVector::from_array_unchecked(a), &m).unwrap().price;
            a[k] += bump;
            let after = predict_nlm(&fit, &FeatureVector::from_array_unchecked(a), &m).unwrap().price;
            prop_assert!(after <= before);
        }
    }
}

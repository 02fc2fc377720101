//! The six-element regressor vector and its capacity-scaled variant.

use crate::data::HourRecord;
use crate::error::Result;
use crate::scenario::sd_scaling_factor;

/// `(W^Δ-, W^Δ, S^Δ-, S^Δ, W^A, S^A)` in MW, with `X^Δ- = max(-X^Δ, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeatureVector {
    pub w_err_neg: f64,
    pub w_err: f64,
    pub s_err_neg: f64,
    pub s_err: f64,
    pub w_actual: f64,
    pub s_actual: f64,
}

fn negative_part(x: f64) -> f64 {
    if x < 0.0 {
        -x
    } else {
        0.0
    }
}

impl FeatureVector {
    pub const LEN: usize = 6;
    pub const NAMES: [&'static str; 6] = ["w_err_neg", "w_err", "s_err_neg", "s_err", "w_actual", "s_actual"];

    /// Builds the vector from forecasts and actuals.
    pub fn from_errors(w_forecast: f64, w_actual: f64, s_forecast: f64, s_actual: f64) -> Self {
        let w_err = w_actual - w_forecast;
        let s_err = s_actual - s_forecast;
        FeatureVector {
            w_err_neg: negative_part(w_err),
            w_err,
            s_err_neg: negative_part(s_err),
            s_err,
            w_actual,
            s_actual,
        }
    }

    /// Builds the vector directly from signed errors and actual generation.
    pub fn from_signed(w_err: f64, s_err: f64, w_actual: f64, s_actual: f64) -> Self {
        FeatureVector {
            w_err_neg: negative_part(w_err),
            w_err,
            s_err_neg: negative_part(s_err),
            s_err,
            w_actual,
            s_actual,
        }
    }

    /// No consistency checks; meant for hypothetical regressors and tests.
    pub fn from_array_unchecked(a: [f64; 6]) -> Self {
        FeatureVector {
            w_err_neg: a[0],
            w_err: a[1],
            s_err_neg: a[2],
            s_err: a[3],
            w_actual: a[4],
            s_actual: a[5],
        }
    }

    pub fn as_array(&self) -> [f64; 6] {
        [self.w_err_neg, self.w_err, self.s_err_neg, self.s_err, self.w_actual, self.s_actual]
    }

    /// Entrywise square `Z ∘ Z`.
    pub fn squared(&self) -> [f64; 6] {
        self.as_array().map(|x| x * x)
    }

    pub fn is_consistent(&self) -> bool {
        self.w_err_neg == negative_part(self.w_err)
            && self.s_err_neg == negative_part(self.s_err)
            && self.w_actual >= 0.0
            && self.s_actual >= 0.0
    }
}

pub fn build_features(record: &HourRecord) -> FeatureVector {
    FeatureVector::from_errors(record.w_forecast, record.w_actual, record.s_forecast, record.s_actual)
}

/// Added-capacity scaling for wind (`_w`) and solar (`_s`).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScaleConfig {
    pub gamma_w: f64,
    pub gamma_s: f64,
    pub rho_w: f64,
    pub rho_s: f64,
}

impl ScaleConfig {
    pub fn wind(gamma: f64, rho: f64) -> Self {
        ScaleConfig { gamma_w: gamma, rho_w: rho, ..Default::default() }
    }

    pub fn solar(gamma: f64, rho: f64) -> Self {
        ScaleConfig { gamma_s: gamma, rho_s: rho, ..Default::default() }
    }

    pub fn both(gamma: f64, rho: f64) -> Self {
        ScaleConfig { gamma_w: gamma, gamma_s: gamma, rho_w: rho, rho_s: rho }
    }
}

/// Error terms (and their negative parts) scale by `sqrt(1 + 2γρ + γ²)`,
/// actual generation by `1 + γ`, separately per technology.
pub fn scale_features(z: &FeatureVector, cfg: &ScaleConfig) -> Result<FeatureVector> {
    let fw = sd_scaling_factor(cfg.gamma_w, cfg.rho_w)?;
    let fs = sd_scaling_factor(cfg.gamma_s, cfg.rho_s)?;
    Ok(FeatureVector {
        w_err_neg: z.w_err_neg * fw,
        w_err: z.w_err * fw,
        s_err_neg: z.s_err_neg * fs,
        s_err: z.s_err * fs,
        w_actual: z.w_actual * (1.0 + cfg.gamma_w),
        s_actual: z.s_actual * (1.0 + cfg.gamma_s),
    })
}

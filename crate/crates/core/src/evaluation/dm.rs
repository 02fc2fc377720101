//! Diebold–Mariano comparison of two residual series.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::stats;

/// Loss exponent: absolute (`1`) or squared (`2`) errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LossNorm {
    Absolute,
    Squared,
}

impl LossNorm {
    pub const BOTH: [LossNorm; 2] = [LossNorm::Absolute, LossNorm::Squared];

    pub fn phi(self) -> u8 {
        match self {
            LossNorm::Absolute => 1,
            LossNorm::Squared => 2,
        }
    }

    pub fn from_phi(phi: u8) -> Result<Self> {
        match phi {
            1 => Ok(LossNorm::Absolute),
            2 => Ok(LossNorm::Squared),
            other => Err(Error::InvalidConfig(alloc::format!("loss norm must be 1 or 2, got {other}"))),
        }
    }

    fn loss(self, e: f64) -> f64 {
        match self {
            LossNorm::Absolute => libm::fabs(e),
            LossNorm::Squared => e * e,
        }
    }
}

/// Standard error of the mean loss differential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DmVariance {
    /// Sample standard deviation over `sqrt(D)`.
    #[default]
    Iid,
    /// Bartlett-weighted long-run variance with the given lag count.
    NeweyWest { lags: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DmResult {
    /// Positive values favour the second model.
    pub t: f64,
    pub p_value: f64,
    pub mean_differential: f64,
    pub n: usize,
}

pub fn dm_test(a: &[f64], b: &[f64], norm: LossNorm) -> Result<DmResult> {
    dm_test_with(a, b, norm, DmVariance::Iid)
}

pub fn dm_test_with(a: &[f64], b: &[f64], norm: LossNorm, variance: DmVariance) -> Result<DmResult> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| norm.loss(*x) - norm.loss(*y)).collect();
    let n = d.len();
    let mean = stats::mean(&d)?;
    let se = match variance {
        DmVariance::Iid => stats::sample_sd(&d)? / libm::sqrt(n as f64),
        DmVariance::NeweyWest { lags } => {
            if n < 2 {
                return Err(Error::InsufficientData("loss differential needs at least 2 values".into()));
            }
            let autocov = |k: usize| -> f64 { (k..n).map(|t| (d[t] - mean) * (d[t - k] - mean)).sum::<f64>() / n as f64 };
            let mut lrv = autocov(0);
            for k in 1..=lags.min(n - 1) {
                lrv += 2.0 * (1.0 - k as f64 / (lags as f64 + 1.0)) * autocov(k);
            }
            if lrv <= 0.0 {
                return Err(Error::ZeroVariance);
            }
            libm::sqrt(lrv / n as f64)
        }
    };
    if !(se > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let t = mean / se;
    Ok(DmResult {
        t,
        p_value: stats::two_sided_p(t),
        mean_differential: mean,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_series_are_degenerate() {
        let a = [1.0, -2.0, 0.5, 3.0];
        assert_eq!(dm_test(&a, &a, LossNorm::Squared), Err(Error::ZeroVariance));
    }

    #[test]
    fn hand_computed_ten_points() {
        let a = [1.2, -0.8, 2.5, -1.9, 0.3, 1.1, -2.2, 0.9, 1.7, -0.4];
        let b = [0.9, -0.5, 1.5, -1.0, 0.6, 0.7, -1.4, 0.2, 1.3, -0.6];
        // |a| - |b|, worked by hand
        let d = [0.3, 0.3, 1.0, 0.9, -0.3, 0.4, 0.8, 0.7, 0.4, -0.2];
        let mean = 4.3 / 10.0;
        let ss: f64 = d.iter().map(|x| (x - mean) * (x - mean)).sum();
        assert!((ss - 1.721).abs() < 1e-12);
        let expected = 0.43 / (libm::sqrt(1.721 / 9.0) / libm::sqrt(10.0));
        let got = dm_test(&a, &b, LossNorm::Absolute).unwrap();
        assert!((got.t - expected).abs() < 1e-10, "{} vs {}", got.t, expected);
        assert!((got.t - 3.109_562_392).abs() < 1e-8);
        assert_eq!(got.n, 10);

        // squared losses: d = a^2 - b^2
        let d2: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * x - y * y).collect();
        let m2 = d2.iter().sum::<f64>() / 10.0;
        let s2 = libm::sqrt(d2.iter().map(|x| (x - m2) * (x - m2)).sum::<f64>() / 9.0);
        let got2 = dm_test(&a, &b, LossNorm::Squared).unwrap();
        assert!((got2.t - m2 / (s2 / libm::sqrt(10.0))).abs() < 1e-10);
    }

    #[test]
    fn p_value_of_large_t_is_small() {
        let a: Vec<f64> = (0..50).map(|i| 2.0 + 0.01 * (i % 7) as f64).collect();
        let b: Vec<f64> = (0..50).map(|i| 1.0 + 0.01 * (i % 5) as f64).collect();
        let r = dm_test(&a, &b, LossNorm::Squared).unwrap();
        assert!(r.t > 10.0 && r.p_value < 1e-10);
    }

    #[test]
    fn newey_west_zero_lags_is_population_scaled() {
        let a = [1.0, 2.0, 0.5, 3.0, 1.5];
        let b = [0.5, 1.0, 1.5, 1.0, 0.5];
        let iid = dm_test(&a, &b, LossNorm::Absolute).unwrap().t;
        let nw = dm_test_with(&a, &b, LossNorm::Absolute, DmVariance::NeweyWest { lags: 0 }).unwrap().t;
        // n - 1 versus n denominators
        assert!((nw - iid * libm::sqrt(5.0 / 4.0)).abs() < 1e-12);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(dm_test(&[1.0, 2.0], &[1.0], LossNorm::Absolute), Err(Error::DimensionMismatch { .. })));
    }

    proptest! {
        #[test]
        fn antisymmetric(pairs in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 3..100), squared in any::<bool>()) {
            let norm = if squared { LossNorm::Squared } else { LossNorm::Absolute };
            let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            match (dm_test(&a, &b, norm), dm_test(&b, &a, norm)) {
                (Ok(x), Ok(y)) => {
                    prop_assert_eq!(x.t, -y.t);
                    prop_assert_eq!(x.p_value, y.p_value);
                }
                (Err(e1), Err(e2)) => prop_assert_eq!(e1, e2),
                _ => prop_assert!(false, "one direction failed"),
            }
        }
    }
}

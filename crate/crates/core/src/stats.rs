//! Small descriptive statistics shared by evaluation and scenario code.

use alloc::vec::Vec;

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Sample standard deviation with the `n - 1` denominator.
pub fn sample_sd(xs: &[f64]) -> Result<f64> {
    if xs.len() < 2 {
        return Err(Error::InsufficientData(alloc::format!(
            "standard deviation needs at least 2 values, got {}",
            xs.len()
        )));
    }
    let m = mean(xs)?;
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    Ok(libm::sqrt(ss / (xs.len() - 1) as f64))
}

/// Empirical quantile on the `(n + 1) p` plotting position with linear
/// interpolation between neighbouring order statistics, clamped to the
/// sample range.
pub fn quantile(xs: &[f64], p: f64) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidConfig(alloc::format!("quantile level {p} outside (0, 1)")));
    }
    let mut sorted: Vec<f64> = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let h = (n as f64 + 1.0) * p;
    if h <= 1.0 {
        return Ok(sorted[0]);
    }
    if h >= n as f64 {
        return Ok(sorted[n - 1]);
    }
    let lo = libm::floor(h) as usize;
    let frac = h - lo as f64;
    // order statistics are 1-based
    Ok(sorted[lo - 1] + frac * (sorted[lo] - sorted[lo - 1]))
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

/// Two-sided p-value of a standard normal statistic.
pub fn two_sided_p(t: f64) -> f64 {
    libm::erfc(libm::fabs(t) / core::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_interpolates_between_order_statistics() {
        let xs: Vec<f64> = (1..=9).map(|x| x as f64).collect();
        // (9 + 1) * 0.25 = 2.5
        assert_eq!(quantile(&xs, 0.25).unwrap(), 2.5);
        assert_eq!(quantile(&xs, 0.5).unwrap(), 5.0);
        assert_eq!(quantile(&xs, 0.001).unwrap(), 1.0);
        assert_eq!(quantile(&xs, 0.999).unwrap(), 9.0);
    }

    #[test]
    fn tail_quantile_position_on_a_year_of_hours() {
        // 8736 hours: (8736 + 1) * 0.001 = 8.737, between the 8th and 9th order statistic
        let xs: Vec<f64> = (0..8736).map(|x| x as f64).collect();
        let q = quantile(&xs, 0.001).unwrap();
        assert!((q - 7.737).abs() < 1e-9);
    }

    #[test]
    fn sd_of_constant_is_zero() {
        assert_eq!(sample_sd(&[3.0, 3.0, 3.0]).unwrap(), 0.0);
        assert!(sample_sd(&[1.0]).is_err());
    }

    #[test]
    fn normal_tails() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((two_sided_p(1.959963984540054) - 0.05).abs() < 1e-12);
    }
}

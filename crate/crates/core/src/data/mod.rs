//! Hourly market records and datasets.

mod synth;

pub use synth::{default_true_beta, generate_synthetic, SynthConfig};

use alloc::string::String;
use alloc::vec::Vec;

use crate::curves::{Side, StepCurve};
use crate::error::{Error, Result};

pub const SECONDS_PER_HOUR: i64 = 3600;
pub const SECONDS_PER_DAY: i64 = 86_400;

pub const DA_PRICE_RANGE: (f64, f64) = (-500.0, 3000.0);
pub const ID_PRICE_RANGE: (f64, f64) = (-9999.0, 9999.0);

/// Seconds since the Unix epoch, UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub fn from_day_hour(day: i64, hour: u32) -> Self {
        Timestamp(day * SECONDS_PER_DAY + hour as i64 * SECONDS_PER_HOUR)
    }

    /// Days since the epoch.
    pub fn day(self) -> i64 {
        self.0.div_euclid(SECONDS_PER_DAY)
    }

    pub fn hour_of_day(self) -> u32 {
        (self.0.rem_euclid(SECONDS_PER_DAY) / SECONDS_PER_HOUR) as u32
    }

    pub fn is_on_the_hour(self) -> bool {
        self.0.rem_euclid(SECONDS_PER_HOUR) == 0
    }

    pub fn plus_hours(self, hours: i64) -> Self {
        Timestamp(self.0 + hours * SECONDS_PER_HOUR)
    }
}

/// One delivery hour.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HourRecord {
    pub timestamp: Timestamp,
    /// Day-ahead auction price, EUR/MWh.
    pub p_da: f64,
    /// Hourly volume-weighted intraday price, EUR/MWh.
    pub p_id: f64,
    pub w_forecast: f64,
    pub w_actual: f64,
    pub s_forecast: f64,
    pub s_actual: f64,
    pub supply_curve: StepCurve,
    pub demand_curve: StepCurve,
}

impl HourRecord {
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| Error::InvalidRecord {
            timestamp: self.timestamp.0,
            reason,
        };
        if !self.timestamp.is_on_the_hour() {
            return Err(fail("timestamp is not on a full hour".into()));
        }
        let in_range = |x: f64, (lo, hi): (f64, f64)| x.is_finite() && x >= lo && x <= hi;
        if !in_range(self.p_da, DA_PRICE_RANGE) {
            return Err(fail(alloc::format!("day-ahead price {} out of range", self.p_da)));
        }
        if !in_range(self.p_id, ID_PRICE_RANGE) {
            return Err(fail(alloc::format!("intraday price {} out of range", self.p_id)));
        }
        for (name, v) in [
            ("w_forecast", self.w_forecast),
            ("w_actual", self.w_actual),
            ("s_forecast", self.s_forecast),
            ("s_actual", self.s_actual),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(fail(alloc::format!("{name} must be a non-negative MW value, got {v}")));
            }
        }
        if self.supply_curve.side() != Side::Supply || self.demand_curve.side() != Side::Demand {
            return Err(fail("curve sides are swapped".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum Provenance {
    Real,
    Synthetic { seed: u64 },
}

/// Time-ordered, validated hourly records.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<HourRecord>,
    provenance: Provenance,
}

impl Dataset {
    pub fn new(records: Vec<HourRecord>, provenance: Provenance) -> Result<Self> {
        for r in &records {
            r.validate()?;
        }
        if let Some(w) = records.windows(2).find(|w| w[1].timestamp <= w[0].timestamp) {
            return Err(Error::InvalidRecord {
                timestamp: w[1].timestamp.0,
                reason: "timestamps must be strictly increasing".into(),
            });
        }
        Ok(Dataset { records, provenance })
    }

    pub fn records(&self) -> &[HourRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<HourRecord> {
        self.records
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records whose delivery day lies in the first `days` calendar days.
    pub fn first_days(&self, days: usize) -> &[HourRecord] {
        let Some(first) = self.records.first() else {
            return &[];
        };
        let end_day = first.timestamp.day() + days as i64;
        let n = self.records.partition_point(|r| r.timestamp.day() < end_day);
        &self.records[..n]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn record(ts: i64) -> HourRecord {
        HourRecord {
            timestamp: Timestamp(ts),
            p_da: 30.0,
            p_id: 31.0,
            w_forecast: 100.0,
            w_actual: 90.0,
            s_forecast: 0.0,
            s_actual: 0.0,
            supply_curve: StepCurve::new(Side::Supply, [(1000.0, 30.0)]).unwrap(),
            demand_curve: StepCurve::new(Side::Demand, [(500.0, 3000.0)]).unwrap(),
        }
    }

    #[test]
    fn timestamp_calendar() {
        let t = Timestamp(1_451_606_400 + 5 * 3600);
        assert_eq!(t.hour_of_day(), 5);
        assert_eq!(t.day(), 16_801);
        assert_eq!(Timestamp::from_day_hour(16_801, 5), t);
        assert_eq!(Timestamp(-1).day(), -1);
    }

    #[test]
    fn dataset_rejects_unordered_and_invalid() {
        assert!(Dataset::new(vec![record(7200), record(3600)], Provenance::Real).is_err());
        let mut bad = record(0);
        bad.w_actual = -1.0;
        assert!(Dataset::new(vec![bad], Provenance::Real).is_err());
        let mut bad = record(0);
        bad.p_da = 3000.5;
        assert!(Dataset::new(vec![bad], Provenance::Real).is_err());
        assert!(Dataset::new(vec![record(1800)], Provenance::Real).is_err());
        assert!(Dataset::new(vec![record(0), record(3600)], Provenance::Real).is_ok());
    }

    #[test]
    fn first_days_slices_calendar_days() {
        let recs = (0..72).map(|h| record(h * 3600)).collect();
        let ds = Dataset::new(recs, Provenance::Real).unwrap();
        assert_eq!(ds.first_days(2).len(), 48);
        assert_eq!(ds.first_days(10).len(), 72);
    }
}

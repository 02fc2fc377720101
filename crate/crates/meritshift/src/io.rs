//! Canonical CSV formats.
//!
//! | file            | columns                                                               |
//! |-----------------|-----------------------------------------------------------------------|
//! | curves.csv      | `timestamp_utc,side,price_eur,volume_mw`                              |
//! | prices.csv      | `timestamp_utc,p_da_eur,p_id_vwap_eur`                                |
//! | renewables.csv  | `timestamp_utc,w_forecast_mw,w_actual_mw,s_forecast_mw,s_actual_mw`   |
//!
//! Timestamps are RFC 3339 in UTC. Curve rows hold cumulative volumes per
//! `(timestamp, side)`, with `side` one of `S` or `D`. Renewables are
//! quarter-hourly.

use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, SecondsFormat};
use meritshift_core::curves::Side;
use meritshift_core::{HourRecord, Timestamp};

use crate::error::{AppError, Location, Result};

pub const CURVES_HEADER: [&str; 4] = ["timestamp_utc", "side", "price_eur", "volume_mw"];
pub const PRICES_HEADER: [&str; 3] = ["timestamp_utc", "p_da_eur", "p_id_vwap_eur"];
pub const RENEWABLES_HEADER: [&str; 5] = ["timestamp_utc", "w_forecast_mw", "w_actual_mw", "s_forecast_mw", "s_actual_mw"];

pub const QUARTERS_PER_HOUR: i64 = 4;
const SECONDS_PER_QUARTER: i64 = 900;

pub fn format_timestamp(ts: Timestamp) -> String {
    DateTime::from_timestamp(ts.0, 0)
        .map(|d| d.to_rfc3339_opts(SecondsFormat::Secs, true))
        .unwrap_or_else(|| ts.0.to_string())
}

pub fn parse_timestamp(s: &str) -> Option<Timestamp> {
    let d = DateTime::parse_from_rfc3339(s.trim()).ok()?;
    (d.timestamp_subsec_nanos() == 0).then(|| Timestamp(d.timestamp()))
}

/// `YYYY-MM-DD` of a day number.
pub fn format_day(day: i64) -> String {
    let ts = format_timestamp(Timestamp::from_day_hour(day, 0));
    ts[..10].to_string()
}

/// A field read from a CSV cell. Empty cells are `None`.
pub(crate) struct Cells<'a> {
    pub record: &'a csv::StringRecord,
    pub at: Location,
}

impl Cells<'_> {
    fn schema(&self, message: impl Into<String>) -> AppError {
        AppError::Schema {
            at: self.at.clone(),
            message: message.into(),
        }
    }

    pub fn unit(&self, message: impl Into<String>) -> AppError {
        AppError::Unit {
            at: self.at.clone(),
            message: message.into(),
        }
    }

    pub fn raw(&self, i: usize) -> Option<&str> {
        self.record.get(i).map(str::trim).filter(|s| !s.is_empty())
    }

    pub fn timestamp(&self, i: usize, name: &str) -> Result<Timestamp> {
        let raw = self.raw(i).ok_or_else(|| self.schema(format!("missing {name}")))?;
        parse_timestamp(raw).ok_or_else(|| self.schema(format!("{name} `{raw}` is not an RFC 3339 timestamp")))
    }

    pub fn number(&self, i: usize, name: &str) -> Result<Option<f64>> {
        let Some(raw) = self.raw(i) else {
            return Ok(None);
        };
        match raw.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(Some(x)),
            _ => Err(self.schema(format!("{name} `{raw}` is not a finite number"))),
        }
    }

    /// Non-negative MW value.
    pub fn volume(&self, i: usize, name: &str) -> Result<Option<f64>> {
        let v = self.number(i, name)?;
        match v {
            Some(x) if x < 0.0 => Err(self.unit(format!("{name} is negative ({x} MW)"))),
            _ => Ok(v),
        }
    }

    /// Price rounded to cents, half away from zero, on the decimal text.
    pub fn price(&self, i: usize, name: &str, round: bool) -> Result<Option<f64>> {
        let v = self.number(i, name)?;
        Ok(match (v, round) {
            (Some(x), true) => Some(round_cents(self.raw(i).unwrap_or_default(), x)),
            _ => v,
        })
    }

    pub fn side(&self, i: usize) -> Result<Option<Side>> {
        match self.raw(i) {
            None => Ok(None),
            Some("S") | Some("s") => Ok(Some(Side::Supply)),
            Some("D") | Some("d") => Ok(Some(Side::Demand)),
            Some(other) => Err(self.schema(format!("side `{other}` is neither S nor D"))),
        }
    }
}

/// Rounds to two decimals, half away from zero. Plain decimal text is
/// rounded digit by digit so that `0.125` goes to `0.13` even though its
/// binary value is slightly below; anything else goes through `f64`.
pub fn round_cents(text: &str, value: f64) -> f64 {
    let t = text.trim();
    let (negative, digits) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    let plain = !int.is_empty()
        && int.len() <= 15
        && int.bytes().all(|b| b.is_ascii_digit())
        && frac.bytes().all(|b| b.is_ascii_digit());
    if !plain {
        return (value * 100.0).round() / 100.0;
    }
    let digit = |k: usize| frac.as_bytes().get(k).map_or(0, |b| i64::from(b - b'0'));
    let mut cents = int.parse::<i64>().unwrap_or(0) * 100 + digit(0) * 10 + digit(1);
    if digit(2) >= 5 {
        cents += 1;
    }
    let x = cents as f64 / 100.0;
    if negative {
        -x
    } else {
        x
    }
}

pub(crate) fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input)
}

pub(crate) fn check_header<R: Read>(rdr: &mut csv::Reader<R>, path: &Path, expected: &[&str]) -> Result<()> {
    let at = Location {
        file: path.to_path_buf(),
        row: 1,
    };
    let found = rdr.headers().map_err(|e| AppError::Schema {
        at: at.clone(),
        message: e.to_string(),
    })?;
    if found.iter().ne(expected.iter().copied()) {
        return Err(AppError::Schema {
            at,
            message: format!("expected header `{}`, found `{}`", expected.join(","), found.iter().collect::<Vec<_>>().join(",")),
        });
    }
    Ok(())
}

/// Iterates data rows with their line numbers.
pub(crate) fn rows<'r, R: Read>(
    rdr: &'r mut csv::Reader<R>,
    path: &'r Path,
    width: usize,
) -> impl Iterator<Item = Result<(csv::StringRecord, Location)>> + 'r {
    rdr.records().map(move |r| {
        let record = r.map_err(|e| {
            let row = e.position().map_or(0, |p| p.line());
            AppError::Schema {
                at: Location {
                    file: path.to_path_buf(),
                    row,
                },
                message: e.to_string(),
            }
        })?;
        let at = Location {
            file: path.to_path_buf(),
            row: record.position().map_or(0, |p| p.line()),
        };
        if record.len() != width {
            return Err(AppError::Schema {
                message: format!("expected {width} fields, found {}", record.len()),
                at,
            });
        }
        Ok((record, at))
    })
}

/// Writes the three canonical files for `records`. Renewables are written
/// as four identical quarters per hour, which average back to the same
/// hourly value.
pub fn write_curves<W: Write>(out: W, records: &[HourRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CURVES_HEADER)?;
    for r in records {
        let ts = format_timestamp(r.timestamp);
        for curve in [&r.supply_curve, &r.demand_curve] {
            let side = curve.side().code().to_string();
            for (v, p) in curve.breakpoints() {
                w.write_record([ts.as_str(), side.as_str(), &p.to_string(), &v.to_string()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_prices<W: Write>(out: W, records: &[HourRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PRICES_HEADER)?;
    for r in records {
        w.write_record([format_timestamp(r.timestamp), r.p_da.to_string(), r.p_id.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_renewables<W: Write>(out: W, records: &[HourRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RENEWABLES_HEADER)?;
    for r in records {
        let values = [r.w_forecast, r.w_actual, r.s_forecast, r.s_actual].map(|x| x.to_string());
        for q in 0..QUARTERS_PER_HOUR {
            let ts = format_timestamp(Timestamp(r.timestamp.0 + q * SECONDS_PER_QUARTER));
            w.write_record(std::iter::once(ts).chain(values.iter().cloned()))?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_is_half_away_from_zero() {
        for (text, want) in [
            ("30.456", 30.46),
            ("30.455", 30.46),
            ("30.454", 30.45),
            ("0.125", 0.13),
            ("-0.125", -0.13),
            ("-12.3449", -12.34),
            ("7", 7.0),
            ("+1.005", 1.01),
            ("1e2", 100.0),
        ] {
            let v: f64 = text.parse().unwrap();
            assert_eq!(round_cents(text, v), want, "{text}");
        }
    }

    #[test]
    fn timestamps_round_trip() {
        let t = Timestamp(1_451_606_400);
        assert_eq!(format_timestamp(t), "2016-01-01T00:00:00Z");
        assert_eq!(parse_timestamp("2016-01-01T00:00:00Z"), Some(t));
        assert_eq!(parse_timestamp("2016-01-01T01:00:00+01:00"), Some(t));
        assert_eq!(parse_timestamp("2016-01-01 00:00"), None);
        assert_eq!(parse_timestamp("2016-01-01T00:00:00.5Z"), None);
        assert_eq!(format_day(16_801), "2016-01-01");
    }
}

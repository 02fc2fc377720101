//! Reading the canonical CSVs into a validated [`Dataset`].

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use meritshift_core::curves::{Side, StepCurve};
use meritshift_core::data::{DA_PRICE_RANGE, ID_PRICE_RANGE, SECONDS_PER_HOUR};
use meritshift_core::{Dataset, HourRecord, Provenance, Timestamp};

use crate::error::{AppError, Location, Result};
use crate::io::{self, Cells, CURVES_HEADER, PRICES_HEADER, QUARTERS_PER_HOUR, RENEWABLES_HEADER};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IngestOptions {
    /// Round prices to cents. Off when re-reading a dataset this crate wrote.
    pub round_prices: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions { round_prices: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DropReason {
    MissingPrice,
    MissingRenewables,
    MissingCurve,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IngestSummary {
    pub hours: usize,
    pub dropped: Vec<(Timestamp, DropReason)>,
}

fn schema(at: &Location, message: impl Into<String>) -> AppError {
    AppError::Schema {
        at: at.clone(),
        message: message.into(),
    }
}

fn hour_start(cells: &Cells<'_>, ts: Timestamp) -> Result<Timestamp> {
    if ts.is_on_the_hour() {
        Ok(ts)
    } else {
        Err(schema(&cells.at, "timestamp is not on a full hour"))
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| AppError::io(path, e))
}

/// Complete curves per hour; `None` marks an hour with a blank cell.
type CurveMap = BTreeMap<(Timestamp, Side), Option<StepCurve>>;

fn read_curves<R: Read>(input: R, path: &Path, opts: IngestOptions) -> Result<CurveMap> {
    let mut rdr = io::reader(input);
    io::check_header(&mut rdr, path, &CURVES_HEADER)?;
    let mut groups: BTreeMap<(Timestamp, Side), (Location, Option<Vec<(f64, f64)>>)> = BTreeMap::new();
    for row in io::rows(&mut rdr, path, CURVES_HEADER.len()) {
        let (record, at) = row?;
        let cells = Cells { record: &record, at };
        let ts = hour_start(&cells, cells.timestamp(0, "timestamp_utc")?)?;
        let side = cells.side(1)?;
        let price = cells.price(2, "price_eur", opts.round_prices)?;
        let volume = cells.volume(3, "volume_mw")?;
        let Some(side) = side else {
            return Err(schema(&cells.at, "missing side"));
        };
        let entry = groups.entry((ts, side)).or_insert_with(|| (cells.at.clone(), Some(Vec::new())));
        match (price, volume, &mut entry.1) {
            (Some(p), Some(v), Some(points)) => points.push((v, p)),
            _ => entry.1 = None,
        }
    }
    groups
        .into_iter()
        .map(|(key, (at, points))| {
            let curve = match points {
                Some(mut pts) => {
                    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                    Some(StepCurve::new(key.1, pts).map_err(|e| schema(&at, format!("curve starting here: {e}")))?)
                }
                None => None,
            };
            Ok((key, curve))
        })
        .collect()
}

fn read_prices<R: Read>(input: R, path: &Path, opts: IngestOptions) -> Result<BTreeMap<Timestamp, Option<(f64, f64)>>> {
    let mut rdr = io::reader(input);
    io::check_header(&mut rdr, path, &PRICES_HEADER)?;
    let mut out = BTreeMap::new();
    for row in io::rows(&mut rdr, path, PRICES_HEADER.len()) {
        let (record, at) = row?;
        let cells = Cells { record: &record, at };
        let ts = hour_start(&cells, cells.timestamp(0, "timestamp_utc")?)?;
        let p_da = cells.price(1, "p_da_eur", opts.round_prices)?;
        let p_id = cells.price(2, "p_id_vwap_eur", opts.round_prices)?;
        for (name, v, (lo, hi)) in [("p_da_eur", p_da, DA_PRICE_RANGE), ("p_id_vwap_eur", p_id, ID_PRICE_RANGE)] {
            if let Some(x) = v.filter(|x| !(lo..=hi).contains(x)) {
                return Err(cells.unit(format!("{name} {x} outside [{lo}, {hi}] EUR/MWh")));
            }
        }
        let value = p_da.zip(p_id);
        if out.insert(ts, value).is_some() {
            return Err(schema(&cells.at, "duplicate timestamp"));
        }
    }
    Ok(out)
}

/// Hourly means of `[w_forecast, w_actual, s_forecast, s_actual]`, `None`
/// unless all four quarters are complete.
fn read_renewables<R: Read>(input: R, path: &Path) -> Result<BTreeMap<Timestamp, Option<[f64; 4]>>> {
    let mut rdr = io::reader(input);
    io::check_header(&mut rdr, path, &RENEWABLES_HEADER)?;
    let mut hours: BTreeMap<Timestamp, [Option<Option<[f64; 4]>>; 4]> = BTreeMap::new();
    for row in io::rows(&mut rdr, path, RENEWABLES_HEADER.len()) {
        let (record, at) = row?;
        let cells = Cells { record: &record, at };
        let ts = cells.timestamp(0, "timestamp_utc")?;
        let offset = ts.0.rem_euclid(SECONDS_PER_HOUR);
        let quarter_len = SECONDS_PER_HOUR / QUARTERS_PER_HOUR;
        if offset % quarter_len != 0 {
            return Err(schema(&cells.at, "timestamp is not on a quarter hour"));
        }
        let mut values = [0.0; 4];
        let mut complete = true;
        for (k, name) in RENEWABLES_HEADER[1..].iter().enumerate() {
            match cells.volume(k + 1, name)? {
                Some(x) => values[k] = x,
                None => complete = false,
            }
        }
        let slot = &mut hours.entry(Timestamp(ts.0 - offset)).or_default()[(offset / quarter_len) as usize];
        if slot.is_some() {
            return Err(schema(&cells.at, "duplicate timestamp"));
        }
        *slot = Some(complete.then_some(values));
    }
    Ok(hours
        .into_iter()
        .map(|(ts, q)| {
            let mean = match q {
                [Some(Some(a)), Some(Some(b)), Some(Some(c)), Some(Some(d))] => {
                    Some(std::array::from_fn(|k| ((a[k] + b[k]) + (c[k] + d[k])) / 4.0))
                }
                _ => None,
            };
            (ts, mean)
        })
        .collect())
}

/// Reads and joins the three files. Hours missing from any source, or with
/// a blank cell anywhere, are dropped.
pub fn ingest_with(curves: &Path, prices: &Path, renewables: &Path, opts: IngestOptions) -> Result<(Dataset, IngestSummary)> {
    let mut curve_map = read_curves(open(curves)?, curves, opts)?;
    let price_map = read_prices(open(prices)?, prices, opts)?;
    let mut ren_map = read_renewables(open(renewables)?, renewables)?;

    let mut all: Vec<Timestamp> = price_map.keys().copied().collect();
    all.extend(ren_map.keys().copied());
    all.extend(curve_map.keys().map(|k| k.0));
    all.sort_unstable();
    all.dedup();

    let mut summary = IngestSummary::default();
    let mut records = Vec::with_capacity(all.len());
    for ts in all {
        let Some(&Some((p_da, p_id))) = price_map.get(&ts) else {
            summary.dropped.push((ts, DropReason::MissingPrice));
            continue;
        };
        let Some(Some([w_forecast, w_actual, s_forecast, s_actual])) = ren_map.remove(&ts) else {
            summary.dropped.push((ts, DropReason::MissingRenewables));
            continue;
        };
        let supply = curve_map.remove(&(ts, Side::Supply)).flatten();
        let demand = curve_map.remove(&(ts, Side::Demand)).flatten();
        let (Some(supply_curve), Some(demand_curve)) = (supply, demand) else {
            summary.dropped.push((ts, DropReason::MissingCurve));
            continue;
        };
        records.push(HourRecord {
            timestamp: ts,
            p_da,
            p_id,
            w_forecast,
            w_actual,
            s_forecast,
            s_actual,
            supply_curve,
            demand_curve,
        });
    }
    summary.hours = records.len();
    Ok((Dataset::new(records, Provenance::Real)?, summary))
}

pub fn ingest(curves: &Path, prices: &Path, renewables: &Path) -> Result<Dataset> {
    ingest_with(curves, prices, renewables, IngestOptions::default()).map(|(d, _)| d)
}

//! Monotone step curves, their equilibrium, the inelastic-demand
//! transformation and horizontal supply shifts.
//!
//! A curve is a list of `(cumulative volume, price)` breakpoints. Breakpoint
//! `i` covers the volume interval `(v[i-1], v[i]]` (with `v[-1] = 0`) at price
//! `p[i]`. Inverse evaluation follows merit-order semantics:
//!
//! * supply, `S(z)`: volume offered at prices `<= z`;
//! * demand, `D(z)`: volume bid at prices `>= z`.
//!
//! The strict variants `S⁻(z)` (offers `< z`) and `D⁺(z)` (bids `> z`) are the
//! one-sided limits used to locate the crossing exactly.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::features::FeatureVector;

pub const PRICE_FLOOR: f64 = -500.0;
pub const PRICE_CAP: f64 = 3000.0;
pub const PRICE_TICK: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Side {
    Supply,
    Demand,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Supply => "supply",
            Side::Demand => "demand",
        }
    }

    /// Single-letter code used by the curve CSV format.
    pub fn code(self) -> char {
        match self {
            Side::Supply => 'S',
            Side::Demand => 'D',
        }
    }
}

/// Returns true when `price` sits on the 0.01 EUR grid.
pub fn is_quantized(price: f64) -> bool {
    let scaled = price / PRICE_TICK;
    libm::fabs(scaled - libm::round(scaled)) <= 1e-6 * libm::fmax(1.0, libm::fabs(scaled))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepCurve {
    side: Side,
    volumes: Vec<f64>,
    prices: Vec<f64>,
    price_floor: f64,
    price_cap: f64,
}

impl StepCurve {
    /// Builds a curve with the exchange's default price bounds.
    pub fn new(side: Side, breakpoints: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        Self::with_bounds(side, breakpoints, PRICE_FLOOR, PRICE_CAP)
    }

    pub fn with_bounds(
        side: Side,
        breakpoints: impl IntoIterator<Item = (f64, f64)>,
        price_floor: f64,
        price_cap: f64,
    ) -> Result<Self> {
        let (volumes, prices): (Vec<f64>, Vec<f64>) = breakpoints.into_iter().unzip();
        let curve = StepCurve {
            side,
            volumes,
            prices,
            price_floor,
            price_cap,
        };
        curve.validate()?;
        Ok(curve)
    }

    fn invalid(&self, reason: impl Into<alloc::string::String>) -> Error {
        Error::InvalidCurve {
            side: self.side.as_str(),
            reason: reason.into(),
        }
    }

    fn validate(&self) -> Result<()> {
        use alloc::format;
        if !(self.price_floor.is_finite() && self.price_cap.is_finite())
            || self.price_floor >= self.price_cap
        {
            return Err(self.invalid("price bounds must be finite with floor < cap"));
        }
        if self.volumes.is_empty() {
            return Err(self.invalid("no breakpoints"));
        }
        let mut prev_volume = 0.0;
        for (i, (&v, &p)) in self.volumes.iter().zip(&self.prices).enumerate() {
            if !v.is_finite() || !p.is_finite() {
                return Err(self.invalid(format!("non-finite breakpoint {i}")));
            }
            if v <= prev_volume {
                return Err(self.invalid(format!(
                    "volumes must be positive and strictly increasing (breakpoint {i}: {v} after {prev_volume})"
                )));
            }
            prev_volume = v;
            if p < self.price_floor || p > self.price_cap {
                return Err(self.invalid(format!("price {p} outside [{}, {}]", self.price_floor, self.price_cap)));
            }
            if !is_quantized(p) {
                return Err(self.invalid(format!("price {p} is not a multiple of 0.01")));
            }
            if i > 0 {
                let before = self.prices[i - 1];
                let ordered = match self.side {
                    Side::Supply => p >= before,
                    Side::Demand => p <= before,
                };
                if !ordered {
                    return Err(self.invalid(format!("price not monotone at breakpoint {i}")));
                }
            }
        }
        Ok(())
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn breakpoints(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.volumes.iter().copied().zip(self.prices.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.volumes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.volumes.is_empty()
    }

    pub fn total_volume(&self) -> f64 {
        *self.volumes.last().expect("validated curves are non-empty")
    }

    pub fn price_floor(&self) -> f64 {
        self.price_floor
    }

    pub fn price_cap(&self) -> f64 {
        self.price_cap
    }

    fn volume_before(&self, idx: usize) -> f64 {
        if idx == 0 {
            0.0
        } else {
            self.volumes[idx - 1]
        }
    }

    /// Inclusive inverse: `S(z)` for supply, `D(z)` for demand.
    pub fn volume_at(&self, price: f64) -> f64 {
        let idx = match self.side {
            Side::Supply => self.prices.partition_point(|&p| p <= price),
            Side::Demand => self.prices.partition_point(|&p| p >= price),
        };
        self.volume_before(idx)
    }

    /// Strict inverse: `S⁻(z)` for supply, `D⁺(z)` for demand.
    pub fn volume_strict(&self, price: f64) -> f64 {
        let idx = match self.side {
            Side::Supply => self.prices.partition_point(|&p| p < price),
            Side::Demand => self.prices.partition_point(|&p| p > price),
        };
        self.volume_before(idx)
    }

    /// Price of the marginal unit at cumulative volume `volume`, or `None`
    /// when the volume falls outside `(0, total_volume]`.
    pub fn price_at(&self, volume: f64) -> Option<f64> {
        if !(volume > 0.0) {
            return None;
        }
        let idx = self.volumes.partition_point(|&v| v < volume);
        self.prices.get(idx).copied()
    }
}

/// Perfectly inelastic demand: a vertical line at `volume`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InelasticDemand {
    volume: f64,
}

impl InelasticDemand {
    pub fn new(volume: f64) -> Result<Self> {
        if !volume.is_finite() || volume < 0.0 {
            return Err(Error::InvalidCurve {
                side: "demand",
                reason: alloc::format!("inelastic volume must be finite and >= 0, got {volume}"),
            });
        }
        Ok(InelasticDemand { volume })
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// The same demand expressed as a step curve bidding everything at the cap.
    pub fn to_curve(&self, price_cap: f64) -> Result<StepCurve> {
        StepCurve::with_bounds(Side::Demand, [(self.volume, price_cap)], PRICE_FLOOR, price_cap)
    }
}

/// Transformed supply curve paired with its vertical demand.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Market {
    pub supply: StepCurve,
    pub demand: InelasticDemand,
}

impl Market {
    pub fn from_wholesale(ws_supply: &StepCurve, ws_demand: &StepCurve) -> Result<Self> {
        let (supply, demand) = to_inelastic(ws_supply, ws_demand)?;
        Ok(Market { supply, demand })
    }

    pub fn price_with_shift(&self, shift: f64) -> ShiftedPrice {
        shift_supply(&self.supply, &self.demand, shift)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub price: f64,
    pub volume: f64,
}

fn check_sides(supply: &StepCurve, demand: &StepCurve) -> Result<()> {
    if supply.side != Side::Supply {
        return Err(supply.invalid("expected a supply curve"));
    }
    if demand.side != Side::Demand {
        return Err(demand.invalid("expected a demand curve"));
    }
    Ok(())
}

/// Sorted, de-duplicated price levels of both curves plus the floor and cap.
fn candidate_prices(supply: &StepCurve, demand: &StepCurve) -> Vec<f64> {
    let floor = libm::fmax(supply.price_floor, demand.price_floor);
    let cap = libm::fmin(supply.price_cap, demand.price_cap);
    let mut prices: Vec<f64> = supply
        .prices
        .iter()
        .chain(&demand.prices)
        .copied()
        .chain([floor, cap])
        .filter(|&p| p >= floor && p <= cap)
        .collect();
    prices.sort_by(f64::total_cmp);
    prices.dedup();
    prices
}

/// Market-clearing point of a supply and a demand step curve.
///
/// The price is the lowest `z` with `S(z) >= D⁺(z)`; the volume is the lowest
/// volume at which both curves pass through that price. Errors with
/// [`Error::NoIntersection`] when no positive volume can clear.
pub fn intersect(supply: &StepCurve, demand: &StepCurve) -> Result<Equilibrium> {
    check_sides(supply, demand)?;
    let candidates = candidate_prices(supply, demand);
    let first = candidates.partition_point(|&z| supply.volume_at(z) < demand.volume_strict(z));
    let price = *candidates.get(first).ok_or(Error::NoIntersection)?;
    let max_volume = libm::fmin(supply.volume_at(price), demand.volume_at(price));
    if !(max_volume > 0.0) {
        return Err(Error::NoIntersection);
    }
    let volume = libm::fmax(supply.volume_strict(price), demand.volume_strict(price));
    Ok(Equilibrium { price, volume })
}

/// Moves all demand elasticity into the supply curve.
///
/// The vertical demand sits at `WSDem⁻¹(P_min)`, and at every price level `z`
/// the new supply offers `WSSup⁻¹(z) + WSDem⁻¹(P_min) - WSDem⁻¹(z)`, where the
/// demand inverse is taken as its right limit (bids strictly above `z`): a bid
/// at `z` leaves the demand side exactly when the price rises past `z`, so it
/// reappears as supply offered at `z`. Bids at the cap never leave.
pub fn to_inelastic(ws_supply: &StepCurve, ws_demand: &StepCurve) -> Result<(StepCurve, InelasticDemand)> {
    check_sides(ws_supply, ws_demand)?;
    let floor = ws_demand.price_floor;
    let cap = libm::fmin(ws_supply.price_cap, ws_demand.price_cap);
    let inelastic = ws_demand.volume_at(floor);

    let mut breakpoints: Vec<(f64, f64)> = Vec::with_capacity(ws_supply.len() + ws_demand.len());
    let mut last = 0.0;
    for z in candidate_prices(ws_supply, ws_demand) {
        let released = if z < cap {
            ws_demand.volume_strict(z)
        } else {
            ws_demand.volume_at(z)
        };
        let volume = ws_supply.volume_at(z) + inelastic - released;
        if volume < last {
            return Err(Error::MonotonicityViolation { price: z });
        }
        if volume > last {
            breakpoints.push((volume, z));
            last = volume;
        }
    }
    let supply = StepCurve::with_bounds(Side::Supply, breakpoints, ws_supply.price_floor, ws_supply.price_cap)?;
    Ok((supply, InelasticDemand::new(inelastic)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Clamp {
    Floor,
    Cap,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftedPrice {
    pub price: f64,
    pub clamp: Option<Clamp>,
}

impl ShiftedPrice {
    pub fn clamped(&self) -> bool {
        self.clamp.is_some()
    }
}

/// Price after moving the supply curve right by `shift` MW, i.e. the supply
/// curve evaluated at `demand - shift`. Off-curve evaluations clamp to the
/// curve's price floor or cap.
pub fn shift_supply(supply: &StepCurve, demand: &InelasticDemand, shift: f64) -> ShiftedPrice {
    let at = demand.volume - shift;
    match supply.price_at(at) {
        Some(price) => ShiftedPrice { price, clamp: None },
        None if at > 0.0 => ShiftedPrice {
            price: supply.price_cap,
            clamp: Some(Clamp::Cap),
        },
        // NaN shifts land here as well
        None => ShiftedPrice {
            price: supply.price_floor,
            clamp: Some(Clamp::Floor),
        },
    }
}

/// Number of coefficients in a curve-shift vector: intercept plus one per feature.
pub const SHIFT_COEFFICIENTS: usize = 1 + FeatureVector::LEN;

/// Total horizontal shift `b0 + b'Z` for a 7-element shift coefficient vector.
pub fn total_shift(beta: &[f64], z: &FeatureVector) -> Result<f64> {
    if beta.len() != SHIFT_COEFFICIENTS {
        return Err(Error::DimensionMismatch {
            expected: SHIFT_COEFFICIENTS,
            got: beta.len(),
        });
    }
    Ok(shift_unchecked(beta, z))
}

pub(crate) fn shift_unchecked(beta: &[f64], z: &FeatureVector) -> f64 {
    z.as_array()
        .iter()
        .zip(&beta[1..])
        .fold(beta[0], |acc, (zk, bk)| acc + bk * zk)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftContribution {
    pub name: &'static str,
    pub mw: f64,
}

/// Splits a shift into the intercept and one contribution per feature, in
/// feature order. Summing the parts left to right reproduces
/// [`total_shift`] bit for bit.
pub fn decompose_shift(beta: &[f64], z: &FeatureVector) -> Result<Vec<ShiftContribution>> {
    if beta.len() != SHIFT_COEFFICIENTS {
        return Err(Error::DimensionMismatch {
            expected: SHIFT_COEFFICIENTS,
            got: beta.len(),
        });
    }
    let mut parts = Vec::with_capacity(SHIFT_COEFFICIENTS);
    parts.push(ShiftContribution {
        name: "intercept",
        mw: beta[0],
    });
    for ((name, zk), bk) in FeatureVector::NAMES.iter().zip(z.as_array()).zip(&beta[1..]) {
        parts.push(ShiftContribution { name, mw: bk * zk });
    }
    Ok(parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn supply(points: &[(f64, f64)]) -> StepCurve {
        StepCurve::new(Side::Supply, points.iter().copied()).unwrap()
    }

    fn demand(points: &[(f64, f64)]) -> StepCurve {
        StepCurve::new(Side::Demand, points.iter().copied()).unwrap()
    }

    #[derive(Clone, Copy, Debug)]
    enum Seg {
        H { y: f64, x0: f64, x1: f64 },
        V { x: f64, y0: f64, y1: f64 },
    }

    /// Closed polyline of a step curve including its vertical risers at
    /// volume 0 and at the total volume.
    fn polyline(c: &StepCurve) -> Vec<Seg> {
        let (start, end) = match c.side() {
            Side::Supply => (c.price_floor(), c.price_cap()),
            Side::Demand => (c.price_cap(), c.price_floor()),
        };
        let mut segs = Vec::new();
        let mut x = 0.0;
        let mut y = start;
        for (v, p) in c.breakpoints() {
            segs.push(Seg::V { x, y0: y, y1: p });
            segs.push(Seg::H { y: p, x0: x, x1: v });
            x = v;
            y = p;
        }
        segs.push(Seg::V { x, y0: y, y1: end });
        segs
    }

    /// Common part of two axis-aligned segments as
    /// `(lowest price, volume at that price, highest volume at that price)`.
    fn common(a: Seg, b: Seg) -> Option<(f64, f64, f64)> {
        let span = |lo: f64, hi: f64| (lo.min(hi), lo.max(hi));
        match (a, b) {
            (Seg::H { y: ya, x0: a0, x1: a1 }, Seg::H { y: yb, x0: b0, x1: b1 }) => {
                let (lo, hi) = (a0.max(b0), a1.min(b1));
                (ya == yb && lo <= hi).then_some((ya, lo, hi))
            }
            (Seg::V { x: xa, y0: a0, y1: a1 }, Seg::V { x: xb, y0: b0, y1: b1 }) => {
                let (al, ah) = span(a0, a1);
                let (bl, bh) = span(b0, b1);
                let lo = al.max(bl);
                (xa == xb && lo <= ah.min(bh)).then_some((lo, xa, xa))
            }
            (Seg::H { y, x0, x1 }, Seg::V { x, y0, y1 }) | (Seg::V { x, y0, y1 }, Seg::H { y, x0, x1 }) => {
                let (lo, hi) = span(y0, y1);
                (x >= x0 && x <= x1 && y >= lo && y <= hi).then_some((y, x, x))
            }
        }
    }

    /// Exhaustive oracle: intersect every pair of polyline segments and keep
    /// the lexicographically lowest (price, volume) point. `None` when the
    /// curves only meet at zero volume.
    pub(crate) fn brute_force_intersect(s: &StepCurve, d: &StepCurve) -> Option<(f64, f64)> {
        let ps = polyline(s);
        let pd = polyline(d);
        let hits: Vec<(f64, f64, f64)> = ps
            .iter()
            .flat_map(|&a| pd.iter().filter_map(move |&b| common(a, b)))
            .collect();
        let best = hits
            .iter()
            .map(|&(p, v, _)| (p, v))
            .min_by(|x, y| x.partial_cmp(y).unwrap())?;
        let reach = hits
            .iter()
            .filter(|h| h.0 == best.0)
            .fold(0.0_f64, |m, h| m.max(h.2));
        (reach > 0.0).then_some(best)
    }

    fn cents(x: f64) -> f64 {
        libm::round(x * 100.0) / 100.0
    }

    prop_compose! {
        fn arb_curve(side: Side, max_steps: usize)
            (widths in prop::collection::vec(1u32..50, 1..=max_steps),
             incs in prop::collection::vec(0u32..40, max_steps),
             start in -20i32..60)
            -> StepCurve
        {
            let mut v = 0.0;
            let mut p = start as f64;
            let pts = widths.iter().zip(&incs).map(|(&w, &inc)| {
                v += 100.0 * w as f64;
                let point = (v, cents(p));
                match side {
                    Side::Supply => p += inc as f64 * 0.5,
                    Side::Demand => p -= inc as f64 * 0.5,
                }
                point
            }).collect::<Vec<_>>();
            StepCurve::new(side, pts).unwrap()
        }
    }

    #[test]
    fn flat_supply_against_vertical_demand() {
        let s = supply(&[(10_000.0, 30.0)]);
        let d = InelasticDemand::new(5000.0).unwrap().to_curve(PRICE_CAP).unwrap();
        let eq = intersect(&s, &d).unwrap();
        assert_eq!((eq.price, eq.volume), (30.0, 5000.0));
    }

    #[test]
    fn supply_above_demand_has_no_intersection() {
        let s = supply(&[(1000.0, 50.0), (2000.0, 80.0)]);
        let d = demand(&[(500.0, 40.0), (900.0, 10.0)]);
        assert_eq!(intersect(&s, &d), Err(Error::NoIntersection));
        assert_eq!(brute_force_intersect(&s, &d), None);
    }

    #[test]
    fn tie_on_shared_flat_segment_takes_lowest_volume() {
        let s = supply(&[(1000.0, 10.0), (3000.0, 40.0), (5000.0, 90.0)]);
        let d = demand(&[(2000.0, 100.0), (4000.0, 40.0), (6000.0, 5.0)]);
        let eq = intersect(&s, &d).unwrap();
        assert_eq!((eq.price, eq.volume), (40.0, 2000.0));
        assert_eq!(brute_force_intersect(&s, &d), Some((40.0, 2000.0)));
    }

    #[test]
    fn rejects_malformed_curves() {
        assert!(StepCurve::new(Side::Supply, []).is_err());
        assert!(StepCurve::new(Side::Supply, [(100.0, 10.0), (100.0, 11.0)]).is_err());
        assert!(StepCurve::new(Side::Supply, [(100.0, 10.0), (200.0, 9.0)]).is_err());
        assert!(StepCurve::new(Side::Demand, [(100.0, 10.0), (200.0, 11.0)]).is_err());
        assert!(StepCurve::new(Side::Supply, [(100.0, 3000.5)]).is_err());
        assert!(StepCurve::new(Side::Supply, [(100.0, 10.005)]).is_err());
        assert!(StepCurve::new(Side::Supply, [(-5.0, 10.0)]).is_err());
    }

    #[test]
    fn inelastic_input_is_left_unchanged() {
        let s = supply(&[(2000.0, -10.0), (6000.0, 25.0), (10_000.0, 80.0)]);
        let d = InelasticDemand::new(7000.0).unwrap().to_curve(PRICE_CAP).unwrap();
        let (t, dem) = to_inelastic(&s, &d).unwrap();
        assert_eq!(t, s);
        assert_eq!(dem.volume(), 7000.0);
    }

    #[test]
    fn transformation_matches_formula_at_every_level() {
        let s = supply(&[(1000.0, -20.0), (3000.0, 15.0), (5000.0, 30.0), (7000.0, 60.0), (9000.0, 200.0)]);
        let d = demand(&[(2000.0, 3000.0), (3500.0, 80.0), (4500.0, 30.0), (5200.0, 10.0), (6000.0, -500.0)]);
        let (t, dem) = to_inelastic(&s, &d).unwrap();
        assert_eq!(dem.volume(), 6000.0);
        for z in s.prices().iter().chain(d.prices()).copied().filter(|&z| z < PRICE_CAP) {
            let expected = s.volume_at(z) + d.volume_at(PRICE_FLOOR) - d.volume_strict(z);
            assert_eq!(t.volume_at(z), expected, "level {z}");
        }
        let before = intersect(&s, &d).unwrap();
        let after = shift_supply(&t, &dem, 0.0);
        assert_eq!(after.price, before.price);
        assert!(dem.volume() >= before.volume);
    }

    #[test]
    fn shift_clamps_outside_domain() {
        let s = supply(&[(1000.0, 5.0), (2000.0, 50.0)]);
        let d = InelasticDemand::new(1500.0).unwrap();
        assert_eq!(shift_supply(&s, &d, 0.0).price, 50.0);
        assert_eq!(shift_supply(&s, &d, 500.0).price, 5.0);
        let low = shift_supply(&s, &d, 1500.0);
        assert_eq!((low.price, low.clamp), (PRICE_FLOOR, Some(Clamp::Floor)));
        let high = shift_supply(&s, &d, -600.0);
        assert_eq!((high.price, high.clamp), (PRICE_CAP, Some(Clamp::Cap)));
        assert!(!shift_supply(&s, &d, -500.0).clamped());
    }

    #[test]
    fn negative_shift_raises_price() {
        let s = supply(&[(1000.0, 5.0), (2000.0, 50.0), (3000.0, 400.0)]);
        let d = InelasticDemand::new(1500.0).unwrap();
        assert!(shift_supply(&s, &d, -800.0).price >= shift_supply(&s, &d, 0.0).price);
    }

    #[test]
    fn decompose_sums_to_total() {
        let beta = [12.5, 0.3, 0.4, 0.8, 0.35, -0.03, -0.02];
        let z = FeatureVector::from_errors(-1234.0, -321.5, 9000.0, 4100.0);
        let total = total_shift(&beta, &z).unwrap();
        let sum = decompose_shift(&beta, &z).unwrap().iter().fold(0.0, |a, c| a + c.mw);
        assert_eq!(sum, total);

        let zero = FeatureVector::from_errors(0.0, 0.0, 0.0, 0.0);
        let parts = decompose_shift(&beta, &zero).unwrap();
        assert_eq!(parts[0].mw, 12.5);
        assert!(parts[1..].iter().all(|c| c.mw == 0.0));

        assert_eq!(
            decompose_shift(&beta[..6], &z),
            Err(Error::DimensionMismatch { expected: 7, got: 6 })
        );
    }

    #[test]
    fn decompose_unit_vector() {
        let beta = [3.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        for k in 0..FeatureVector::LEN {
            let mut arr = [0.0; 6];
            arr[k] = 1.0;
            let z = FeatureVector::from_array_unchecked(arr);
            let parts = decompose_shift(&beta, &z).unwrap();
            let nonzero: Vec<f64> = parts.iter().map(|c| c.mw).filter(|&m| m != 0.0).collect();
            assert_eq!(nonzero, vec![3.0, beta[1 + k]]);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn intersect_matches_segment_scan(s in arb_curve(Side::Supply, 10), d in arb_curve(Side::Demand, 10)) {
            let fast = intersect(&s, &d).ok().map(|e| (e.price, e.volume));
            prop_assert_eq!(fast, brute_force_intersect(&s, &d));
        }

        #[test]
        fn transformation_preserves_price(s in arb_curve(Side::Supply, 10), d in arb_curve(Side::Demand, 10)) {
            if let Some((price, volume)) = brute_force_intersect(&s, &d) {
                let (t, dem) = to_inelastic(&s, &d).unwrap();
                let vertical = dem.to_curve(PRICE_CAP).unwrap();
                let (p_t, _) = brute_force_intersect(&t, &vertical).unwrap();
                prop_assert!((p_t - price).abs() <= PRICE_TICK + 1e-9);
                prop_assert!(dem.volume() >= volume);
                prop_assert_eq!(shift_supply(&t, &dem, 0.0).price, p_t);
            }
        }

        #[test]
        fn shift_is_monotone(s in arb_curve(Side::Supply, 10), v in 0.0f64..60_000.0, a in -30_000.0f64..30_000.0, b in -30_000.0f64..30_000.0) {
            let d = InelasticDemand::new(v).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(shift_supply(&s, &d, lo).price >= shift_supply(&s, &d, hi).price);
        }
    }
}

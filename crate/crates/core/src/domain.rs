//! Core value types: the tick grid, trade tapes and uncertainty-zone geometry.
//!
//! Traded prices live on an integer grid measured in sub-tick quanta
//! ([`QUANTA_PER_TICK`] per tick) so that grid membership and spread
//! comparisons are exact. Conversion to currency happens only at the edges,
//! through [`TickValue`].

use std::fmt;
use std::ops::Sub;
use std::str::FromStr;

use chrono::NaiveDate;
use rust_decimal::prelude::ToPrimitive;
use rust_decimal::Decimal;

use crate::error::{invalid, Error, Result};

/// Sub-tick resolution of [`Price`].
pub const QUANTA_PER_TICK: i64 = 1_000_000;

/// A price expressed as an integer number of sub-tick quanta.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Price(i64);

impl Price {
    pub const fn from_quanta(quanta: i64) -> Self {
        Price(quanta)
    }

    pub const fn from_ticks(ticks: i64) -> Self {
        Price(ticks * QUANTA_PER_TICK)
    }

    pub const fn quanta(self) -> i64 {
        self.0
    }

    pub const fn is_on_grid(self) -> bool {
        self.0 % QUANTA_PER_TICK == 0
    }

    /// Whole ticks, or `None` when the price sits between grid points.
    pub const fn ticks(self) -> Option<i64> {
        if self.is_on_grid() {
            Some(self.0 / QUANTA_PER_TICK)
        } else {
            None
        }
    }

    /// Price in (fractional) tick units.
    pub fn ticks_f64(self) -> f64 {
        self.0 as f64 / QUANTA_PER_TICK as f64
    }

    pub const fn offset_ticks(self, ticks: i64) -> Self {
        Price(self.0 + ticks * QUANTA_PER_TICK)
    }
}

impl Sub for Price {
    type Output = i64;

    /// Difference in quanta.
    fn sub(self, rhs: Price) -> i64 {
        self.0 - rhs.0
    }
}

/// Exchange tick value α in currency units. Always strictly positive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TickValue(Decimal);

impl TickValue {
    pub fn new(value: Decimal) -> Result<Self> {
        if value <= Decimal::ZERO {
            return Err(invalid(format!("tick value must be > 0, got {value}")));
        }
        Ok(TickValue(value.normalize()))
    }

    pub fn decimal(self) -> Decimal {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn to_currency(self, price: Price) -> f64 {
        price.ticks_f64() * self.as_f64()
    }

    /// Exact decimal rendering of a price.
    pub fn to_decimal(self, price: Price) -> Decimal {
        let ticks = Decimal::from_i128_with_scale(price.quanta() as i128, 6);
        (ticks * self.0).normalize()
    }

    /// Converts an exact decimal price, requiring it to lie on the tick grid.
    pub fn grid_price(self, value: Decimal) -> Result<Price> {
        let ticks = value / self.0;
        if ticks.fract() != Decimal::ZERO {
            return Err(invalid(format!(
                "price {value} is not a multiple of the tick value {}",
                self.0
            )));
        }
        let ticks = ticks
            .to_i64()
            .filter(|t| t.checked_mul(QUANTA_PER_TICK).is_some())
            .ok_or_else(|| invalid(format!("price {value} out of range")))?;
        Ok(Price::from_ticks(ticks))
    }

    pub fn parse_grid_price(self, text: &str) -> Result<Price> {
        let value = Decimal::from_str(text.trim()).map_err(|e| invalid(format!("bad decimal {text:?}: {e}")))?;
        self.grid_price(value)
    }

    /// Nearest grid point to a currency amount; exact halves round down.
    pub fn nearest_grid(self, x: f64) -> Price {
        let ticks = x / self.as_f64();
        Price::from_ticks((ticks - 0.5).ceil() as i64)
    }
}

impl FromStr for TickValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let value = Decimal::from_str(s.trim()).map_err(|e| invalid(format!("bad tick value {s:?}: {e}")))?;
        TickValue::new(value)
    }
}

impl fmt::Display for TickValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Static description of an asset: identifier, tick value α and, when known
/// (simulated markets), the uncertainty parameter η.
#[derive(Clone, Debug, PartialEq)]
pub struct AssetSpec {
    pub asset_id: String,
    pub tick: TickValue,
    eta: Option<f64>,
}

impl AssetSpec {
    pub fn new(asset_id: impl Into<String>, tick: TickValue, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(invalid(format!("eta must lie in (0, 1], got {eta}")));
        }
        Ok(AssetSpec {
            asset_id: asset_id.into(),
            tick,
            eta: Some(eta),
        })
    }

    /// An asset observed in data, whose η is still to be estimated.
    pub fn instrument(asset_id: impl Into<String>, tick: TickValue) -> Self {
        AssetSpec {
            asset_id: asset_id.into(),
            tick,
            eta: None,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.tick.as_f64()
    }

    pub fn eta(&self) -> Option<f64> {
        self.eta
    }

    pub fn require_eta(&self) -> Result<f64> {
        self.eta
            .ok_or_else(|| invalid(format!("asset {} has no eta", self.asset_id)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    pub fn from_delta(delta: i64) -> Option<Self> {
        match delta.signum() {
            1 => Some(Direction::Up),
            -1 => Some(Direction::Down),
            _ => None,
        }
    }

    pub const fn sign(self) -> i64 {
        match self {
            Direction::Up => 1,
            Direction::Down => -1,
        }
    }

    pub const fn signum(self) -> f64 {
        self.sign() as f64
    }

    pub const fn flip(self) -> Self {
        match self {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
        }
    }
}

/// Best bid and ask prevailing right before a trade.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Quote {
    bid: Price,
    ask: Price,
}

impl Quote {
    pub fn new(bid: Price, ask: Price) -> Result<Self> {
        if ask <= bid {
            return Err(invalid(format!(
                "ask {} must exceed bid {} (quanta)",
                ask.quanta(),
                bid.quanta()
            )));
        }
        if !bid.is_on_grid() || !ask.is_on_grid() {
            return Err(invalid("quotes must lie on the tick grid"));
        }
        Ok(Quote { bid, ask })
    }

    pub fn bid(self) -> Price {
        self.bid
    }

    pub fn ask(self) -> Price {
        self.ask
    }

    pub fn spread_ticks(self) -> i64 {
        (self.ask - self.bid) / QUANTA_PER_TICK
    }
}

/// A raw print before price-change marking.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Print {
    pub time_ms: i64,
    pub price: Price,
    pub size: u64,
    pub quote: Option<Quote>,
}

/// One trade of a [`TradeTape`]; `direction` is set iff the trade changed the
/// last traded price.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TradeEvent {
    /// Milliseconds since session open.
    pub time_ms: i64,
    pub price: Price,
    pub size: u64,
    pub quote: Option<Quote>,
    pub direction: Option<Direction>,
}

impl TradeEvent {
    pub fn changed_price(&self) -> bool {
        self.direction.is_some()
    }
}

/// A trade that moved the last traded price.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PriceChange {
    pub time_ms: i64,
    pub price: Price,
    pub direction: Direction,
}

/// Session-level metadata carried by a tape.
#[derive(Clone, Debug, PartialEq)]
pub struct TapeHeader {
    pub asset: AssetSpec,
    pub date: NaiveDate,
    /// Session open in UTC milliseconds since the epoch.
    pub session_open_ms: i64,
    pub session_length_ms: i64,
    /// Last traded price before the first event, when known. Without it the
    /// first trade of the tape defines the opening price.
    pub open_price: Option<Price>,
}

/// The observable data of one asset-day: time-ordered trades with their
/// pre-trade quotes.
#[derive(Clone, Debug, PartialEq)]
pub struct TradeTape {
    header: TapeHeader,
    events: Vec<TradeEvent>,
}

impl TradeTape {
    /// Builds a tape, marking price changes by comparing consecutive traded
    /// prices (the first print is compared with `open_price` when present).
    pub fn from_prints(header: TapeHeader, prints: impl IntoIterator<Item = Print>) -> Result<Self> {
        if header.session_length_ms <= 0 {
            return Err(invalid("session length must be positive"));
        }
        if let Some(open) = header.open_price {
            if !open.is_on_grid() {
                return Err(invalid("opening price must lie on the tick grid"));
            }
        }
        let mut last_price = header.open_price;
        let mut last_time = i64::MIN;
        let mut events = Vec::new();
        for (row, print) in prints.into_iter().enumerate() {
            if print.time_ms < last_time {
                return Err(invalid(format!(
                    "trade {row} at {} ms precedes the previous trade at {last_time} ms",
                    print.time_ms
                )));
            }
            if !print.price.is_on_grid() {
                return Err(invalid(format!("trade {row} price is off the tick grid")));
            }
            let direction = last_price.and_then(|p| Direction::from_delta(print.price - p));
            events.push(TradeEvent {
                time_ms: print.time_ms,
                price: print.price,
                size: print.size,
                quote: print.quote,
                direction,
            });
            last_price = Some(print.price);
            last_time = print.time_ms;
        }
        Ok(TradeTape { header, events })
    }

    pub fn header(&self) -> &TapeHeader {
        &self.header
    }

    pub fn asset(&self) -> &AssetSpec {
        &self.header.asset
    }

    pub fn date(&self) -> NaiveDate {
        self.header.date
    }

    pub fn events(&self) -> &[TradeEvent] {
        &self.events
    }

    /// Total number of trades M.
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn session_length_secs(&self) -> f64 {
        self.header.session_length_ms as f64 / 1000.0
    }

    /// Price in force before the first trade.
    pub fn opening_price(&self) -> Option<Price> {
        self.header.open_price.or_else(|| self.events.first().map(|e| e.price))
    }

    pub fn price_changes(&self) -> Vec<PriceChange> {
        self.events
            .iter()
            .filter_map(|e| {
                e.direction.map(|direction| PriceChange {
                    time_ms: e.time_ms,
                    price: e.price,
                    direction,
                })
            })
            .collect()
    }

    /// Number of price changes larger than one tick. Zero on tapes that obey
    /// the one-tick jump assumption.
    pub fn multi_tick_jumps(&self) -> usize {
        let mut prev = self.header.open_price;
        let mut count = 0;
        for e in &self.events {
            if let Some(p) = prev {
                if (e.price - p).abs() > QUANTA_PER_TICK {
                    count += 1;
                }
            }
            prev = Some(e.price);
        }
        count
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Zone {
    Outside,
    Bid,
    BuySell,
    Ask,
}

/// Efficient-price zones for one-tick quotes `[b, b + α]`.
///
/// The buy/sell zone `[b+α/2−ηα, b+α/2+ηα]` is closed; the bid zone
/// `(b−α/2−ηα, b+α/2−ηα)` and ask zone `(b+α/2+ηα, b+3α/2+ηα)` are open.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZoneGeometry {
    bid: f64,
    alpha: f64,
    eta: f64,
}

impl ZoneGeometry {
    pub fn new(bid: f64, alpha: f64, eta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid(format!("tick value must be > 0, got {alpha}")));
        }
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(invalid(format!("eta must lie in (0, 1], got {eta}")));
        }
        if !bid.is_finite() {
            return Err(invalid("bid must be finite"));
        }
        Ok(ZoneGeometry { bid, alpha, eta })
    }

    pub fn for_quote(asset: &AssetSpec, bid: Price) -> Result<Self> {
        Self::new(asset.tick.to_currency(bid), asset.alpha(), asset.require_eta()?)
    }

    pub fn bid_zone(&self) -> (f64, f64) {
        let b = self.bid;
        let (a, e) = (self.alpha, self.eta);
        (b - a / 2.0 - e * a, b + a / 2.0 - e * a)
    }

    pub fn buy_sell_zone(&self) -> (f64, f64) {
        let mid = self.bid + self.alpha / 2.0;
        let half = self.eta * self.alpha;
        (mid - half, mid + half)
    }

    pub fn ask_zone(&self) -> (f64, f64) {
        let b = self.bid;
        let (a, e) = (self.alpha, self.eta);
        (b + a / 2.0 + e * a, b + 3.0 * a / 2.0 + e * a)
    }

    /// Width 2ηα of the buy/sell zone.
    pub fn implicit_spread(&self) -> f64 {
        2.0 * self.eta * self.alpha
    }

    pub fn classify(&self, x: f64) -> Zone {
        let (lo, hi) = self.buy_sell_zone();
        if x >= lo && x <= hi {
            return Zone::BuySell;
        }
        let (bid_lo, _) = self.bid_zone();
        let (_, ask_hi) = self.ask_zone();
        if x > bid_lo && x < lo {
            Zone::Bid
        } else if x > hi && x < ask_hi {
            Zone::Ask
        } else {
            Zone::Outside
        }
    }
}

//! Statistics computed from a [`TradeTape`]: the uncertainty parameter η̂,
//! efficient-price recovery, integrated variance, volatility per trade, the
//! signature plot, Roll's measure and pre-trade spread statistics.
//!
//! All prices are reported in currency units; integrated variances in
//! currency².

use std::collections::BTreeMap;

use chrono::NaiveDate;

use crate::domain::{Direction, PriceChange, TickValue, TradeTape};
use crate::error::{invalid, Error, Result};

/// Days with η̂ above this value are flagged (η̂ is a noisy estimate and may
/// exceed 1/2 on real data; it is never clamped).
pub const ETA_FLAG_THRESHOLD: f64 = 0.55;

/// Alternations N⁽ᵃ⁾ and continuations N⁽ᶜ⁾ of one-tick price moves. The
/// first change has no predecessor and counts as neither.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AlternationCounts {
    pub alternations: u64,
    pub continuations: u64,
}

impl AlternationCounts {
    pub fn total(&self) -> u64 {
        self.alternations + self.continuations
    }

    pub fn continuation_fraction(&self) -> f64 {
        self.continuations as f64 / self.total() as f64
    }
}

pub fn count_alternations<I>(directions: I) -> Result<AlternationCounts>
where
    I: IntoIterator<Item = Direction>,
{
    let mut counts = AlternationCounts::default();
    let mut prev: Option<Direction> = None;
    let mut seen = 0usize;
    for d in directions {
        seen += 1;
        if let Some(p) = prev {
            if p == d {
                counts.continuations += 1;
            } else {
                counts.alternations += 1;
            }
        }
        prev = Some(d);
    }
    if seen < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 price changes, got {seen}"
        )));
    }
    Ok(counts)
}

/// η̂ = N⁽ᶜ⁾ / (2 N⁽ᵃ⁾).
pub fn estimate_eta(counts: &AlternationCounts) -> Result<f64> {
    if counts.alternations == 0 {
        return Err(Error::Degenerate(format!(
            "no alternations among {} continuations",
            counts.continuations
        )));
    }
    Ok(counts.continuations as f64 / (2.0 * counts.alternations as f64))
}

/// Efficient price at the time of a price change.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecoveredPrice {
    pub time_ms: i64,
    pub value: f64,
}

/// X̂ = P − sign(ΔP)·(1/2 − η̂)·α at each price change.
pub fn recover_efficient_prices(changes: &[PriceChange], eta_hat: f64, tick: TickValue) -> Result<Vec<RecoveredPrice>> {
    if !(eta_hat >= 0.0 && eta_hat.is_finite()) {
        return Err(invalid(format!("eta estimate must be finite and >= 0, got {eta_hat}")));
    }
    if changes.is_empty() {
        return Err(Error::InsufficientData("no price changes".into()));
    }
    let shift = (0.5 - eta_hat) * tick.as_f64();
    Ok(changes
        .iter()
        .map(|c| RecoveredPrice {
            time_ms: c.time_ms,
            value: tick.to_currency(c.price) - c.direction.signum() * shift,
        })
        .collect())
}

/// Σ (X̂ᵢ − X̂ᵢ₋₁)².
pub fn estimate_integrated_variance(xhat: &[f64]) -> Result<f64> {
    if xhat.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 recovered prices, got {}",
            xhat.len()
        )));
    }
    Ok(xhat.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum())
}

/// σ̂ / √M.
pub fn volatility_per_trade(sigma_hat: f64, m_trades: u64) -> Result<f64> {
    if m_trades == 0 {
        return Err(Error::InsufficientData("no trades".into()));
    }
    Ok(sigma_hat / (m_trades as f64).sqrt())
}

/// Realized variance of the traded price against the sampling interval Δ
/// (in units of `1/sampling_rate` seconds).
#[derive(Clone, Debug, PartialEq)]
pub struct SignatureCurve {
    /// Samples per second n.
    pub sampling_rate: f64,
    pub points: BTreeMap<u32, f64>,
}

impl SignatureCurve {
    /// Least-squares slope of realized variance against Δ over `lo..=hi`.
    pub fn slope(&self, lo: u32, hi: u32) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self.points.range(lo..=hi).map(|(&d, &v)| (d as f64, v)).collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Some(sxy / sxx)
    }

    /// max/min over the curve; `None` if the curve is empty or touches zero.
    pub fn max_min_ratio(&self) -> Option<f64> {
        let max = self.points.values().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.points.values().copied().fold(f64::INFINITY, f64::min);
        (min > 0.0 && min.is_finite()).then(|| max / min)
    }
}

/// Δ ↦ Σᵢ (P_{Δi/n} − P_{Δ(i−1)/n})² for Δ = 1..=`delta_max`, sampling the
/// last traded price (previous-tick) on the uniform grid `{j/n}`.
pub fn signature_plot(tape: &TradeTape, sampling_rate: f64, delta_max: u32) -> Result<SignatureCurve> {
    if !(sampling_rate > 0.0 && sampling_rate.is_finite()) {
        return Err(invalid(format!("sampling rate must be > 0, got {sampling_rate}")));
    }
    if delta_max == 0 {
        return Err(invalid("delta_max must be at least 1"));
    }
    let open = tape
        .opening_price()
        .ok_or_else(|| Error::InsufficientData("empty tape".into()))?;
    let span = tape.session_length_secs();
    if span < delta_max as f64 / sampling_rate {
        return Err(Error::InsufficientData(format!(
            "tape spans {span} s, shorter than delta_max/n = {} s",
            delta_max as f64 / sampling_rate
        )));
    }

    let n_samples = (sampling_rate * span).floor() as usize;
    let mut sampled = Vec::with_capacity(n_samples + 1);
    let events = tape.events();
    let mut next = 0;
    let mut price = open;
    for j in 0..=n_samples {
        let at_ms = j as f64 * 1000.0 / sampling_rate;
        while next < events.len() && events[next].time_ms as f64 <= at_ms {
            price = events[next].price;
            next += 1;
        }
        sampled.push(price.ticks_f64());
    }

    let alpha2 = tape.asset().alpha().powi(2);
    let points = (1..=delta_max)
        .map(|delta| {
            let rv: f64 = sampled
                .iter()
                .step_by(delta as usize)
                .collect::<Vec<_>>()
                .windows(2)
                .map(|w| (w[1] - w[0]).powi(2))
                .sum();
            (delta, rv * alpha2)
        })
        .collect();
    Ok(SignatureCurve { sampling_rate, points })
}

/// Closed-form √(−2 Cov₁) = √((2 − 4η)/(1 + 2η))·α of tick-by-tick increments.
pub fn roll_implicit_measure(eta: f64, alpha: f64) -> Result<f64> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(invalid(format!("eta must lie in (0, 1], got {eta}")));
    }
    if eta > 0.5 {
        return Err(Error::Domain(format!(
            "Roll measure undefined for eta = {eta} > 1/2 (negative radicand)"
        )));
    }
    Ok(((2.0 - 4.0 * eta) / (1.0 + 2.0 * eta)).sqrt() * alpha)
}

/// Lag-one sample autocovariance of the price increments between
/// consecutive changes, in currency².
pub fn first_order_autocovariance(changes: &[PriceChange], tick: TickValue) -> Result<f64> {
    if changes.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 price changes, got {}",
            changes.len()
        )));
    }
    let alpha = tick.as_f64();
    let incs: Vec<f64> = changes
        .windows(2)
        .map(|w| (w[1].price - w[0].price) as f64 / crate::domain::QUANTA_PER_TICK as f64 * alpha)
        .collect();
    let mean = incs.iter().sum::<f64>() / incs.len() as f64;
    let cov = incs.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum::<f64>() / incs.len() as f64;
    Ok(cov)
}

/// Empirical Roll measure √(−2 Cov₁).
pub fn empirical_roll_measure(changes: &[PriceChange], tick: TickValue) -> Result<f64> {
    let cov = first_order_autocovariance(changes, tick)?;
    if cov >= 0.0 {
        return Err(Error::Domain(format!("non-negative first-order autocovariance {cov}")));
    }
    Ok((-2.0 * cov).sqrt())
}

/// Σ (P_{tᵢ₊₁} − P_{tᵢ})² over consecutive trades, in currency².
pub fn traded_realized_variance(tape: &TradeTape) -> f64 {
    let Some(open) = tape.opening_price() else {
        return 0.0;
    };
    let mut prev = open;
    let mut sum_sq = 0.0;
    for e in tape.events() {
        let d = (e.price - prev) as f64 / crate::domain::QUANTA_PER_TICK as f64;
        sum_sq += d * d;
        prev = e.price;
    }
    sum_sq * tape.asset().alpha().powi(2)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpreadStats {
    /// Mean pre-trade spread S, currency.
    pub avg_spread: f64,
    /// Percentage of trades whose pre-trade spread is exactly one tick.
    pub frac_one_tick: f64,
}

pub fn spread_stats(tape: &TradeTape) -> Result<SpreadStats> {
    if tape.is_empty() {
        return Err(Error::InsufficientData("empty tape".into()));
    }
    let missing: Vec<usize> = tape
        .events()
        .iter()
        .enumerate()
        .filter(|(_, e)| e.quote.is_none())
        .map(|(i, _)| i)
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingQuotes { rows: missing });
    }
    let (mut total_ticks, mut one_tick) = (0i128, 0u64);
    for q in tape.events().iter().filter_map(|e| e.quote) {
        let s = q.spread_ticks();
        total_ticks += s as i128;
        if s == 1 {
            one_tick += 1;
        }
    }
    let m = tape.len() as f64;
    Ok(SpreadStats {
        avg_spread: total_ticks as f64 / m * tape.asset().alpha(),
        frac_one_tick: 100.0 * one_tick as f64 / m,
    })
}

/// One asset-day of the spread/volatility study.
#[derive(Clone, Debug, PartialEq)]
pub struct DailyRecord {
    pub date: NaiveDate,
    pub asset_id: String,
    pub eta_hat: f64,
    /// Tick value α, currency.
    pub alpha: f64,
    /// √ of the integrated-variance estimate, currency.
    pub sigma_hat: f64,
    /// Total trade count M, price-changing or not.
    pub m_trades: u64,
    pub avg_spread: f64,
    pub frac_one_tick: f64,
}

impl DailyRecord {
    pub fn is_flagged(&self) -> bool {
        self.eta_hat > ETA_FLAG_THRESHOLD
    }

    /// Half the implicit spread, η̂α.
    pub fn implicit_half_spread(&self) -> f64 {
        self.eta_hat * self.alpha
    }

    pub fn vol_per_trade(&self) -> f64 {
        self.sigma_hat / (self.m_trades as f64).sqrt()
    }

    /// Regressor η̂α√M.
    pub fn implicit_term(&self) -> f64 {
        self.eta_hat * self.alpha * (self.m_trades as f64).sqrt()
    }

    /// Regressor S√M.
    pub fn spread_term(&self) -> f64 {
        self.avg_spread * (self.m_trades as f64).sqrt()
    }
}

pub fn build_daily_record(tape: &TradeTape) -> Result<DailyRecord> {
    let asset = tape.asset();
    let ctx = |e: Error| e.with_context(asset.asset_id.clone(), tape.date());
    let changes = tape.price_changes();
    let counts = count_alternations(changes.iter().map(|c| c.direction)).map_err(ctx)?;
    let eta_hat = estimate_eta(&counts).map_err(ctx)?;
    let xhat: Vec<f64> = recover_efficient_prices(&changes, eta_hat, asset.tick)
        .map_err(ctx)?
        .into_iter()
        .map(|r| r.value)
        .collect();
    let variance = estimate_integrated_variance(&xhat).map_err(ctx)?;
    let spreads = spread_stats(tape).map_err(ctx)?;
    Ok(DailyRecord {
        date: tape.date(),
        asset_id: asset.asset_id.clone(),
        eta_hat,
        alpha: asset.alpha(),
        sigma_hat: variance.sqrt(),
        m_trades: tape.len() as u64,
        avg_spread: spreads.avg_spread,
        frac_one_tick: spreads.frac_one_tick,
    })
}

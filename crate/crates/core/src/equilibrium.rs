//! Closed-form equilibrium quantities: where the efficient price goes after a
//! trade, what a market order costs ex post, and the market maker's P&L.

use crate::domain::AssetSpec;
use crate::error::{invalid, Result};

/// Default Wyart constant, for which the P&L reduces to S/2 − σ_tr.
pub const DEFAULT_WYART_C: f64 = 2.0;

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta <= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("eta must lie in (0, 1], got {eta}")))
    }
}

/// `(p_down, p_up)` after an upward trade: the efficient price leaves the
/// zone through the lower barrier (2ηα below) or the upper one (α above).
pub fn crossing_probabilities(eta: f64) -> Result<(f64, f64)> {
    check_eta(eta)?;
    let d = 1.0 + 2.0 * eta;
    Ok((1.0 / d, 2.0 * eta / d))
}

/// α/2 − ηα for raw inputs.
pub fn market_order_cost_raw(alpha: f64, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(invalid(format!("tick value must be > 0, got {alpha}")));
    }
    Ok(alpha / 2.0 - eta * alpha)
}

/// Expected ex post cost of a market order, α/2 − ηα.
pub fn market_order_cost(asset: &AssetSpec) -> Result<f64> {
    market_order_cost_raw(asset.alpha(), asset.require_eta()?)
}

/// S/2 − (c/2)·σ_tr.
pub fn market_maker_pnl(spread: f64, sigma_per_trade: f64, c: f64) -> Result<f64> {
    if !(1.0..=2.0).contains(&c) {
        return Err(invalid(format!("c must lie in [1, 2], got {c}")));
    }
    if !(spread > 0.0 && spread.is_finite()) {
        return Err(invalid(format!("spread must be > 0, got {spread}")));
    }
    if !(sigma_per_trade >= 0.0 && sigma_per_trade.is_finite()) {
        return Err(invalid(format!(
            "volatility per trade must be >= 0, got {sigma_per_trade}"
        )));
    }
    Ok(spread / 2.0 - c / 2.0 * sigma_per_trade)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EquilibriumReport {
    pub p_down: f64,
    pub p_up: f64,
    pub market_order_cost: f64,
    pub mm_pnl_per_trade: f64,
    pub wyart_c: f64,
}

impl EquilibriumReport {
    pub fn new(alpha: f64, eta: f64, spread: f64, sigma_per_trade: f64, c: f64) -> Result<Self> {
        let (p_down, p_up) = crossing_probabilities(eta)?;
        Ok(Self {
            p_down,
            p_up,
            market_order_cost: market_order_cost_raw(alpha, eta)?,
            mm_pnl_per_trade: market_maker_pnl(spread, sigma_per_trade, c)?,
            wyart_c: c,
        })
    }
}

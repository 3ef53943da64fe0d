//! What happens to η when the tick value changes, and which tick value
//! would bring η to 1/2.
//!
//! Top-of-book liquidity is modelled as f(x) = c·xᵝ with daily volume and
//! volatility held fixed, so the trade count scales as M = M₀(α₀/α)ᵝ. The
//! spread is approximated by one tick inside these formulas.

use std::fmt;

use crate::error::{invalid, Error, Result};

/// Constant standing in for p₂/p₁ in the simplified formulas.
const SIMPLIFIED_RATIO: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FormulaVersion {
    /// Uses the fitted (p₁, p₂).
    Fitted = 1,
    /// p₁ = 1, p₂ = 0.1.
    Simplified = 2,
    /// p₁ = 1, p₂ = 0.
    NoSpread = 3,
}

impl FormulaVersion {
    pub const ALL: [FormulaVersion; 3] = [Self::Fitted, Self::Simplified, Self::NoSpread];

    pub fn number(self) -> u8 {
        self as u8
    }
}

impl TryFrom<u8> for FormulaVersion {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Self::Fitted),
            2 => Ok(Self::Simplified),
            3 => Ok(Self::NoSpread),
            other => Err(invalid(format!("formula version must be 1, 2 or 3, got {other}"))),
        }
    }
}

impl fmt::Display for FormulaVersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TickScenario {
    pub alpha0: f64,
    /// New tick value; equal to `alpha0` until set.
    pub alpha: f64,
    pub eta0: f64,
    pub p1_0: f64,
    pub p2_0: f64,
    pub beta: f64,
    pub m0: Option<f64>,
    /// Daily volatility, held fixed across the change.
    pub sigma0: Option<f64>,
}

impl TickScenario {
    pub fn new(alpha0: f64, eta0: f64, p1_0: f64, p2_0: f64, beta: f64) -> Self {
        Self {
            alpha0,
            alpha: alpha0,
            eta0,
            p1_0,
            p2_0,
            beta,
            m0: None,
            sigma0: None,
        }
    }

    pub fn with_new_tick(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_activity(mut self, m0: f64, sigma0: f64) -> Self {
        self.m0 = Some(m0);
        self.sigma0 = Some(sigma0);
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha0", self.alpha0), ("alpha", self.alpha)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.eta0 > 0.0 && self.eta0.is_finite()) {
            return Err(invalid(format!("eta0 must be > 0, got {}", self.eta0)));
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(invalid(format!("beta must be > 0, got {}", self.beta)));
        }
        if self.beta >= 2.0 {
            return Err(Error::Domain(format!(
                "beta = {} leaves a non-positive exponent 1 - beta/2",
                self.beta
            )));
        }
        if !self.p1_0.is_finite() || !self.p2_0.is_finite() {
            return Err(invalid("regression coefficients must be finite"));
        }
        if let Some(m0) = self.m0 {
            if !(m0 > 0.0 && m0.is_finite()) {
                return Err(invalid(format!("m0 must be > 0, got {m0}")));
            }
        }
        if let Some(s) = self.sigma0 {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(invalid(format!("sigma0 must be >= 0, got {s}")));
            }
        }
        Ok(())
    }

    fn exponent(&self) -> f64 {
        1.0 - self.beta / 2.0
    }

    /// p₂/p₁ for the given version.
    fn ratio(&self, version: FormulaVersion) -> Result<f64> {
        match version {
            FormulaVersion::Fitted => {
                if self.p1_0 <= 0.0 {
                    return Err(invalid(format!("p1_0 must be > 0, got {}", self.p1_0)));
                }
                Ok(self.p2_0 / self.p1_0)
            }
            FormulaVersion::Simplified => Ok(SIMPLIFIED_RATIO),
            FormulaVersion::NoSpread => Ok(0.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EtaForecast {
    pub version: FormulaVersion,
    pub eta_pred: f64,
    /// Trade count after the change, when M₀ is known.
    pub m_pred: Option<f64>,
    /// Whether a one-tick spread stays profitable for market makers.
    pub in_large_tick_regime: bool,
    pub warning: Option<String>,
}

pub fn predict_eta(s: &TickScenario, version: FormulaVersion) -> Result<EtaForecast> {
    s.validate()?;
    let k = s.ratio(version)?;
    let eta_pred = (s.eta0 + k) * (s.alpha0 / s.alpha).powf(s.exponent()) - k;

    let m_pred =
        s.m0.map(|m0| scale_trade_count(m0, s.alpha0, s.alpha, s.beta))
            .transpose()?;
    let mut in_regime = eta_pred <= 0.5;
    if let (Some(m), Some(sigma)) = (m_pred, s.sigma0) {
        in_regime &= check_large_tick_regime(s.alpha, sigma, m)?;
    }
    let warning = (!(eta_pred > 0.0 && eta_pred <= 0.5)).then(|| {
        format!("predicted eta {eta_pred:.4} lies outside (0, 1/2]; the large-tick approximation no longer holds")
    });
    if let Some(w) = &warning {
        log::warn!("{w}");
    }
    Ok(EtaForecast {
        version,
        eta_pred,
        m_pred,
        in_large_tick_regime: in_regime,
        warning,
    })
}

/// M = M₀(α₀/α)ᵝ.
pub fn scale_trade_count(m0: f64, alpha0: f64, alpha: f64, beta: f64) -> Result<f64> {
    for (name, v) in [("m0", m0), ("alpha0", alpha0), ("alpha", alpha), ("beta", beta)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(invalid(format!("{name} must be > 0, got {v}")));
        }
    }
    Ok(m0 * (alpha0 / alpha).powf(beta))
}

/// α/2 ≥ σ/√M.
pub fn check_large_tick_regime(alpha: f64, sigma: f64, m: f64) -> Result<bool> {
    if !(alpha > 0.0 && m > 0.0 && sigma >= 0.0) {
        return Err(invalid(format!(
            "need alpha > 0, m > 0, sigma >= 0; got {alpha}, {m}, {sigma}"
        )));
    }
    Ok(alpha / 2.0 >= sigma / m.sqrt())
}

/// Tick value at which the forecast η reaches 1/2.
pub fn optimal_tick(s: &TickScenario, version: FormulaVersion) -> Result<f64> {
    s.validate()?;
    let k = s.ratio(version)?;
    Ok(s.alpha0 * ((s.eta0 + k) / (0.5 + k)).powf(1.0 / s.exponent()))
}

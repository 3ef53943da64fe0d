//! Synthetic markets whose fill-trade intensity follows the equilibrium
//! relation ηα ≈ σ/√M, written out in the trade CSV layout.

use std::fs;
use std::path::Path;

use chrono::{Days, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use rayon::prelude::*;

use crate::domain::{AssetSpec, TickValue, TradeTape};
use crate::error::{invalid, Result};
use crate::io::config::Config;
use crate::io::trades::write_trade_file;
use crate::simulator::{simulate_day, EfficientPathSpec, TapeConfig, TrueParams};

const VOL_STREAM: u64 = 3;

/// Poisson intensity of non-price-changing trades that makes the expected
/// total trade count σ²t/(ηα)²: λ = σ²/(α²η)·(1/η − 1/2).
pub fn equilibrium_intensity(sigma: f64, alpha: f64, eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta <= 1.0) || !(alpha > 0.0) || !(sigma >= 0.0) {
        return Err(invalid(format!(
            "need 0 < eta <= 1, alpha > 0, sigma >= 0; got {eta}, {alpha}, {sigma}"
        )));
    }
    Ok(sigma * sigma / (alpha * alpha * eta) * (1.0 / eta - 0.5))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticAsset {
    pub id: String,
    pub tick: TickValue,
    /// η of each day, cycled over the sample.
    pub etas: Vec<f64>,
    /// Median volatility per second, currency.
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticMarket {
    pub assets: Vec<SyntheticAsset>,
    pub days: usize,
    pub session_secs: f64,
    /// Standard deviation of log daily volatility.
    pub sigma_dispersion: f64,
    pub seed: u64,
    pub start: NaiveDate,
}

#[derive(Clone, Debug)]
pub struct SyntheticDay {
    pub asset: usize,
    pub day: usize,
    pub sigma: f64,
    pub tape: TradeTape,
    pub truth: TrueParams,
}

impl SyntheticMarket {
    pub fn day_seed(&self, asset: usize, day: usize) -> u64 {
        self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ ((asset as u64) << 32 | day as u64)
    }

    fn simulate_one(&self, asset: usize, day: usize) -> Result<SyntheticDay> {
        let a = &self.assets[asset];
        if a.etas.is_empty() {
            return Err(invalid(format!("asset {} has no eta values", a.id)));
        }
        let eta = a.etas[day % a.etas.len()];
        let seed = self.day_seed(asset, day);
        let mut vol_rng = ChaCha8Rng::seed_from_u64(seed);
        vol_rng.set_stream(VOL_STREAM);
        let sigma = if self.sigma_dispersion > 0.0 {
            LogNormal::new(a.sigma.ln(), self.sigma_dispersion)
                .map_err(|e| invalid(e.to_string()))?
                .sample(&mut vol_rng)
        } else {
            a.sigma
        };
        let spec_asset = AssetSpec::new(a.id.clone(), a.tick, eta)?;
        let alpha = spec_asset.alpha();
        let x0 = 1000.0 * alpha + 0.3 * alpha;
        let spec = EfficientPathSpec::with_default_dt(x0, 0.0, sigma, self.session_secs, &spec_asset)?;
        let date = self
            .start
            .checked_add_days(Days::new(day as u64))
            .ok_or_else(|| invalid("date out of range"))?;
        let open = date
            .and_hms_opt(8, 0, 0)
            .expect("valid time")
            .and_utc()
            .timestamp_millis();
        let cfg = TapeConfig::new(equilibrium_intensity(sigma, alpha, eta)?, seed).with_session(date, open);
        let (tape, truth) = simulate_day(&spec, &spec_asset, &cfg)?;
        Ok(SyntheticDay {
            asset,
            day,
            sigma,
            tape,
            truth,
        })
    }

    /// All asset-days, ordered by asset then day.
    pub fn simulate(&self) -> Result<Vec<SyntheticDay>> {
        let jobs: Vec<(usize, usize)> = (0..self.assets.len())
            .flat_map(|a| (0..self.days).map(move |d| (a, d)))
            .collect();
        jobs.into_par_iter().map(|(a, d)| self.simulate_one(a, d)).collect()
    }

    /// Writes `<dir>/<asset>/<date>.csv` for every day plus `<dir>/tickzone.conf`
    /// pointing the pipeline at the data. Returns that configuration.
    pub fn write_dataset(&self, dir: &Path) -> Result<Config> {
        let days = self.simulate()?;
        let mut config = Config::default();
        config.set("input_dir", dir.display().to_string());
        for a in &self.assets {
            fs::create_dir_all(dir.join(&a.id))?;
            config.set(format!("asset.{}.tick_value", a.id), a.tick.to_string());
        }
        for d in &days {
            let a = &self.assets[d.asset];
            write_trade_file(&d.tape, &dir.join(&a.id).join(format!("{}.csv", d.tape.date())))?;
        }
        fs::write(dir.join("tickzone.conf"), config.render())?;
        Ok(config)
    }
}

//! Published statistics for eleven 2009 futures contracts: average η, spread
//! statistics, daily regression estimates and optimal tick values. Shipped
//! as `fixtures/futures_2009.csv` and compiled into the library.

use std::sync::OnceLock;

use serde::Deserialize;

use crate::domain::TickValue;
use crate::error::{Error, Result};
use crate::tick_policy::TickScenario;

const FUTURES_2009_CSV: &str = include_str!("../fixtures/futures_2009.csv");

/// A published point estimate with its 95% interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FuturesFixture {
    /// Identifier without spaces, e.g. `Bobl1`.
    pub id: String,
    pub name: String,
    pub exchange: String,
    pub class: String,
    pub currency: String,
    pub tick: TickValue,
    /// `HH:MM-HH:MM` in local exchange time.
    pub session: String,
    pub timezone: String,
    pub trades_per_day: u64,
    /// Average η over the sample.
    pub eta: f64,
    /// Average percentage of trades at a one-tick spread.
    pub s_eq: f64,
    pub p1: Estimate,
    pub p2: Estimate,
    pub p3: Estimate,
    pub r2: f64,
    pub optimal_tick_beta_one: f64,
    pub optimal_tick_beta_half: f64,
}

impl FuturesFixture {
    /// Scenario with the published η, p₁ and p₂ at the current tick value.
    pub fn scenario(&self, beta: f64) -> TickScenario {
        TickScenario::new(self.tick.as_f64(), self.eta, self.p1.value, self.p2.value, beta)
    }

    /// Published optimal tick for β ∈ {1, 1/2}.
    pub fn published_optimal_tick(&self, beta: f64) -> Option<f64> {
        if beta == 1.0 {
            Some(self.optimal_tick_beta_one)
        } else if beta == 0.5 {
            Some(self.optimal_tick_beta_half)
        } else {
            None
        }
    }
}

#[derive(Deserialize)]
struct Row {
    id: String,
    name: String,
    exchange: String,
    class: String,
    currency: String,
    tick_value: String,
    session: String,
    timezone: String,
    trades_per_day: u64,
    eta: f64,
    s_eq: f64,
    p1: f64,
    p1_lo: f64,
    p1_hi: f64,
    p2: f64,
    p2_lo: f64,
    p2_hi: f64,
    p3: f64,
    p3_lo: f64,
    p3_hi: f64,
    r2: f64,
    opt_beta1: f64,
    opt_beta_half: f64,
}

fn parse(text: &str) -> Result<Vec<FuturesFixture>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    reader
        .deserialize::<Row>()
        .map(|row| {
            let r = row?;
            Ok(FuturesFixture {
                tick: r.tick_value.parse()?,
                id: r.id,
                name: r.name,
                exchange: r.exchange,
                class: r.class,
                currency: r.currency,
                session: r.session,
                timezone: r.timezone,
                trades_per_day: r.trades_per_day,
                eta: r.eta,
                s_eq: r.s_eq,
                p1: Estimate {
                    value: r.p1,
                    lo: r.p1_lo,
                    hi: r.p1_hi,
                },
                p2: Estimate {
                    value: r.p2,
                    lo: r.p2_lo,
                    hi: r.p2_hi,
                },
                p3: Estimate {
                    value: r.p3,
                    lo: r.p3_lo,
                    hi: r.p3_hi,
                },
                r2: r.r2,
                optimal_tick_beta_one: r.opt_beta1,
                optimal_tick_beta_half: r.opt_beta_half,
            })
        })
        .collect()
}

pub fn futures_2009() -> &'static [FuturesFixture] {
    static TABLE: OnceLock<Vec<FuturesFixture>> = OnceLock::new();
    TABLE.get_or_init(|| parse(FUTURES_2009_CSV).expect("bundled fixture parses"))
}

/// Case-insensitive lookup by id or display name.
pub fn lookup(id: &str) -> Result<&'static FuturesFixture> {
    futures_2009()
        .iter()
        .find(|f| f.id.eq_ignore_ascii_case(id) || f.name.eq_ignore_ascii_case(id))
        .ok_or_else(|| Error::InvalidParameter(format!("unknown fixture asset {id:?}")))
}

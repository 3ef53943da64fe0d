//! Synthetic large-tick markets.
//!
//! A latent efficient price is simulated on a fixed time grid; the last traded
//! price moves by one tick whenever the efficient price exits the uncertainty
//! zone around it. Barrier hits between grid points are recovered with the
//! Brownian-bridge crossing probability, so event statistics stay unbiased at
//! coarse step sizes.
//!
//! Randomness comes from independent ChaCha streams of a single seed (path
//! increments, bridge draws, fill-trade arrivals). Simulating a path and then
//! applying the zones therefore produces the same events as the fused
//! [`simulate_day`] route.

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::domain::{AssetSpec, Direction, Price, Print, Quote, TapeHeader, TradeTape};
use crate::error::{invalid, Result};

const PATH_STREAM: u64 = 0;
const BRIDGE_STREAM: u64 = 1;
const FILL_STREAM: u64 = 2;

/// Bridge probabilities below exp(-40) are treated as zero.
const MAX_BRIDGE_EXPONENT: f64 = 40.0;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Right-continuous piecewise-constant function of time.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    starts: Vec<f64>,
    values: Vec<f64>,
}

impl Schedule {
    pub fn constant(value: f64) -> Self {
        Schedule {
            starts: vec![0.0],
            values: vec![value],
        }
    }

    /// `pieces` are `(start_time, value)` pairs; the first must start at 0.
    pub fn piecewise(pieces: Vec<(f64, f64)>) -> Result<Self> {
        if pieces.first().map(|p| p.0) != Some(0.0) {
            return Err(invalid("schedule must start at time 0"));
        }
        if pieces.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(invalid("schedule breakpoints must be strictly increasing"));
        }
        if pieces.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
            return Err(invalid("schedule entries must be finite"));
        }
        let (starts, values) = pieces.into_iter().unzip();
        Ok(Schedule { starts, values })
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let idx = self.starts.partition_point(|&s| s <= t);
        self.values[idx.saturating_sub(1)]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// ∫₀ᵗ v(u)² du.
    pub fn integral_of_square(&self, t: f64) -> f64 {
        let mut total = 0.0;
        for (i, (&start, &v)) in self.starts.iter().zip(&self.values).enumerate() {
            if start >= t {
                break;
            }
            let end = self.starts.get(i + 1).copied().unwrap_or(f64::INFINITY).min(t);
            total += v * v * (end - start);
        }
        total
    }
}

/// Efficient price dX = a dt + σ dW on `[0, horizon]`, discretised with step `dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct EfficientPathSpec {
    pub x0: f64,
    pub drift: Schedule,
    pub volatility: Schedule,
    pub horizon: f64,
    pub dt: f64,
}

impl EfficientPathSpec {
    pub fn constant(x0: f64, drift: f64, sigma: f64, horizon: f64, dt: f64) -> Self {
        EfficientPathSpec {
            x0,
            drift: Schedule::constant(drift),
            volatility: Schedule::constant(sigma),
            horizon,
            dt,
        }
    }

    /// Constant-coefficient spec whose step satisfies σ√dt ≤ ηα/10.
    pub fn with_default_dt(x0: f64, drift: f64, sigma: f64, horizon: f64, asset: &AssetSpec) -> Result<Self> {
        let mut spec = Self::constant(x0, drift, sigma, horizon, horizon);
        spec.dt = default_dt(&spec.volatility, horizon, asset)?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.x0.is_finite() {
            return Err(invalid("x0 must be finite"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.horizon >= self.dt && self.horizon.is_finite()) {
            return Err(invalid(format!(
                "horizon {} must be at least one step ({})",
                self.horizon, self.dt
            )));
        }
        if self.volatility.values().iter().any(|&s| s < 0.0) {
            return Err(invalid("volatility must be non-negative"));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt - 1e-9).ceil().max(1.0) as usize
    }

    /// Grid time of step boundary `k`; the last step is shortened to end at the horizon.
    pub fn time(&self, k: usize) -> f64 {
        (k as f64 * self.dt).min(self.horizon)
    }

    /// True integrated variance ∫₀ᵗ σ²(u) du.
    pub fn integrated_variance(&self) -> f64 {
        self.volatility.integral_of_square(self.horizon)
    }
}

/// Largest step with σ_max √dt ≤ ηα/10, capped at the horizon.
pub fn default_dt(volatility: &Schedule, horizon: f64, asset: &AssetSpec) -> Result<f64> {
    let eta = asset.require_eta()?;
    let sigma_max = volatility.values().iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if sigma_max == 0.0 {
        return Ok(horizon);
    }
    let dt = (eta * asset.alpha() / 10.0 / sigma_max).powi(2);
    Ok(dt.min(horizon))
}

#[derive(Clone, Copy, Debug)]
struct Step {
    t0: f64,
    t1: f64,
    x0: f64,
    x1: f64,
    sigma: f64,
}

struct PathStepper<'a> {
    spec: &'a EfficientPathSpec,
    rng: ChaCha8Rng,
    k: usize,
    n: usize,
    x: f64,
}

impl<'a> PathStepper<'a> {
    fn new(spec: &'a EfficientPathSpec, seed: u64) -> Self {
        PathStepper {
            spec,
            rng: stream_rng(seed, PATH_STREAM),
            k: 0,
            n: spec.steps(),
            x: spec.x0,
        }
    }
}

impl Iterator for PathStepper<'_> {
    type Item = Step;

    fn next(&mut self) -> Option<Step> {
        if self.k >= self.n {
            return None;
        }
        let t0 = self.spec.time(self.k);
        let t1 = self.spec.time(self.k + 1);
        let h = t1 - t0;
        let a = self.spec.drift.value_at(t0);
        let sigma = self.spec.volatility.value_at(t0);
        let z: f64 = self.rng.sample(StandardNormal);
        let x0 = self.x;
        let x1 = x0 + a * h + sigma * h.sqrt() * z;
        self.x = x1;
        self.k += 1;
        Some(Step { t0, t1, x0, x1, sigma })
    }
}

/// A discretised efficient-price path with `X[0] = x0`.
#[derive(Clone, Debug)]
pub struct EfficientPath {
    spec: EfficientPathSpec,
    seed: u64,
    values: Vec<f64>,
}

impl EfficientPath {
    pub fn spec(&self) -> &EfficientPathSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Values at the grid times `spec().time(k)`, `k = 0..=steps`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn terminal(&self) -> f64 {
        *self.values.last().expect("path has at least x0")
    }

    fn steps(&self) -> impl Iterator<Item = Step> + '_ {
        self.values.windows(2).enumerate().map(|(k, w)| {
            let t0 = self.spec.time(k);
            Step {
                t0,
                t1: self.spec.time(k + 1),
                x0: w[0],
                x1: w[1],
                sigma: self.spec.volatility.value_at(t0),
            }
        })
    }
}

pub fn simulate_efficient_path(spec: &EfficientPathSpec, seed: u64) -> Result<EfficientPath> {
    spec.validate()?;
    let mut values = Vec::with_capacity(spec.steps() + 1);
    values.push(spec.x0);
    values.extend(PathStepper::new(spec, seed).map(|s| s.x1));
    Ok(EfficientPath {
        spec: spec.clone(),
        seed,
        values,
    })
}

/// A one-tick move of the last traded price.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PriceChangeEvent {
    /// Seconds since the start of the path.
    pub time: f64,
    pub new_price: Price,
    pub direction: Direction,
    /// The barrier value hit, `new_price − direction·(α/2 − ηα)` in currency.
    pub efficient_price_at_crossing: f64,
}

struct ZoneTracker {
    asset: AssetSpec,
    half_width: f64,
    price: Price,
    rng: ChaCha8Rng,
}

impl ZoneTracker {
    fn new(asset: &AssetSpec, p0: Price, seed: u64) -> Result<Self> {
        let eta = asset.require_eta()?;
        if !p0.is_on_grid() {
            return Err(invalid("initial traded price must lie on the tick grid"));
        }
        Ok(ZoneTracker {
            asset: asset.clone(),
            half_width: asset.alpha() * (0.5 + eta),
            price: p0,
            rng: stream_rng(seed, BRIDGE_STREAM),
        })
    }

    fn barriers(&self) -> (f64, f64) {
        let p = self.asset.tick.to_currency(self.price);
        (p - self.half_width, p + self.half_width)
    }

    /// Fraction of the segment at which `barrier` is first hit, if it is.
    fn hit(&mut self, y0: f64, y1: f64, barrier: f64, var: f64) -> Option<f64> {
        let d0 = (barrier - y0).abs();
        let crossed = if barrier > y0 { y1 >= barrier } else { y1 <= barrier };
        if crossed {
            return Some(d0 / (y1 - y0).abs());
        }
        if var <= 0.0 {
            return None;
        }
        let d1 = (barrier - y1).abs();
        let exponent = 2.0 * d0 * d1 / var;
        if exponent > MAX_BRIDGE_EXPONENT {
            return None;
        }
        let u: f64 = self.rng.random();
        // Reflected linear interpolation: the hit is placed where a straight
        // line through the mirrored endpoint meets the barrier.
        (u < (-exponent).exp()).then(|| d0 / (d0 + d1))
    }

    fn advance(&mut self, step: Step, out: &mut Vec<PriceChangeEvent>) {
        let (mut s0, mut y0) = (step.t0, step.x0);
        loop {
            let h = step.t1 - s0;
            if h <= 0.0 {
                return;
            }
            let var = step.sigma * step.sigma * h;
            let (down, up) = self.barriers();
            let up_hit = self.hit(y0, step.x1, up, var);
            let down_hit = self.hit(y0, step.x1, down, var);
            let (frac, direction, barrier) = match (up_hit, down_hit) {
                (None, None) => return,
                (Some(fu), Some(fd)) if fd < fu => (fd, Direction::Down, down),
                (Some(fu), _) => (fu, Direction::Up, up),
                (None, Some(fd)) => (fd, Direction::Down, down),
            };
            let time = s0 + frac * h;
            self.price = self.price.offset_ticks(direction.sign());
            out.push(PriceChangeEvent {
                time,
                new_price: self.price,
                direction,
                efficient_price_at_crossing: barrier,
            });
            s0 = time;
            y0 = barrier;
        }
    }
}

/// Emits an event each time the efficient price first reaches
/// `P ± (α/2 + ηα)` around the current traded price `P`, starting at `p0`.
pub fn apply_uncertainty_zones(path: &EfficientPath, asset: &AssetSpec, p0: Price) -> Result<Vec<PriceChangeEvent>> {
    let mut tracker = ZoneTracker::new(asset, p0, path.seed)?;
    let mut events = Vec::new();
    for step in path.steps() {
        tracker.advance(step, &mut events);
    }
    Ok(events)
}

/// Fill-trade generation and session placement for a simulated tape.
#[derive(Clone, Debug, PartialEq)]
pub struct TapeConfig {
    /// Poisson intensity λ of trades that leave the price unchanged, per second.
    pub intensity: f64,
    pub seed: u64,
    pub date: NaiveDate,
    /// Session open in UTC milliseconds since the epoch.
    pub session_open_ms: i64,
}

impl TapeConfig {
    /// Session on 2009-06-15 opening at 08:00 UTC.
    pub fn new(intensity: f64, seed: u64) -> Self {
        let date = NaiveDate::from_ymd_opt(2009, 6, 15).expect("valid date");
        let open = date
            .and_hms_opt(8, 0, 0)
            .expect("valid time")
            .and_utc()
            .timestamp_millis();
        TapeConfig {
            intensity,
            seed,
            date,
            session_open_ms: open,
        }
    }

    pub fn with_session(mut self, date: NaiveDate, session_open_ms: i64) -> Self {
        self.date = date;
        self.session_open_ms = session_open_ms;
        self
    }
}

fn to_ms(seconds: f64) -> i64 {
    (seconds * 1000.0).floor() as i64
}

/// Interleaves Poisson fill trades at the prevailing price with the price
/// changes. Every trade carries a one-tick quote bracket: `[P−α, P]` for an
/// up-move (or a fill whose next move is down) and `[P, P+α]` otherwise.
pub fn generate_tape(
    events: &[PriceChangeEvent],
    cfg: &TapeConfig,
    asset: &AssetSpec,
    horizon: f64,
    p0: Price,
) -> Result<TradeTape> {
    if !(cfg.intensity >= 0.0 && cfg.intensity.is_finite()) {
        return Err(invalid(format!("trade intensity must be >= 0, got {}", cfg.intensity)));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(invalid("horizon must be positive"));
    }
    if events.windows(2).any(|w| w[1].time < w[0].time) {
        return Err(invalid("price-change events must be time ordered"));
    }
    if events.iter().any(|e| e.time < 0.0 || e.time > horizon) {
        return Err(invalid("price-change events must lie within the session"));
    }

    let mut fills = Vec::new();
    if cfg.intensity > 0.0 {
        let gaps = Exp::new(cfg.intensity).map_err(|e| invalid(e.to_string()))?;
        let mut rng = stream_rng(cfg.seed, FILL_STREAM);
        let mut t = gaps.sample(&mut rng);
        while t < horizon {
            fills.push(t);
            t += gaps.sample(&mut rng);
        }
    }

    let below = |p: Price| Quote::new(p.offset_ticks(-1), p);
    let above = |p: Price| Quote::new(p, p.offset_ticks(1));
    let horizon_ms = (horizon * 1000.0).round() as i64;

    let mut prints = Vec::with_capacity(events.len() + fills.len());
    let mut next_event = 0;
    let mut price = p0;
    let mut last_direction = None;
    let mut fill_iter = fills.into_iter().peekable();
    loop {
        let event_time = events.get(next_event).map(|e| e.time);
        let fill_time = fill_iter.peek().copied();
        let take_event = match (event_time, fill_time) {
            (None, None) => break,
            (Some(te), Some(tf)) => te <= tf,
            (Some(_), None) => true,
            (None, Some(_)) => false,
        };
        let (time, quote) = if take_event {
            let e = &events[next_event];
            next_event += 1;
            price = e.new_price;
            last_direction = Some(e.direction);
            let quote = match e.direction {
                Direction::Up => below(price)?,
                Direction::Down => above(price)?,
            };
            (e.time, quote)
        } else {
            let t = fill_iter.next().expect("peeked");
            let guide = events.get(next_event).map(|e| e.direction.flip()).or(last_direction);
            let quote = match guide {
                Some(Direction::Up) => below(price)?,
                Some(Direction::Down) | None => above(price)?,
            };
            (t, quote)
        };
        let time_ms = to_ms(time);
        if time_ms >= horizon_ms {
            continue;
        }
        prints.push(Print {
            time_ms,
            price,
            size: 1,
            quote: Some(quote),
        });
    }

    let header = TapeHeader {
        asset: asset.clone(),
        date: cfg.date,
        session_open_ms: cfg.session_open_ms,
        session_length_ms: horizon_ms,
        open_price: Some(p0),
    };
    TradeTape::from_prints(header, prints)
}

/// Ground truth of a simulated day.
#[derive(Clone, Debug, PartialEq)]
pub struct TrueParams {
    pub eta: f64,
    pub integrated_variance: f64,
    pub x0: f64,
    pub p0: Price,
    pub events: Vec<PriceChangeEvent>,
}

/// Simulates the efficient path, the price changes and the full tape in one
/// pass, without storing the path.
pub fn simulate_day(spec: &EfficientPathSpec, asset: &AssetSpec, cfg: &TapeConfig) -> Result<(TradeTape, TrueParams)> {
    spec.validate()?;
    let eta = asset.require_eta()?;
    let p0 = asset.tick.nearest_grid(spec.x0);
    let mut tracker = ZoneTracker::new(asset, p0, cfg.seed)?;
    let mut events = Vec::new();
    for step in PathStepper::new(spec, cfg.seed) {
        tracker.advance(step, &mut events);
    }
    events.retain(|e| to_ms(e.time) < (spec.horizon * 1000.0).round() as i64);
    let tape = generate_tape(&events, cfg, asset, spec.horizon, p0)?;
    let truth = TrueParams {
        eta,
        integrated_variance: spec.integrated_variance(),
        x0: spec.x0,
        p0,
        events,
    };
    Ok((tape, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{TickValue, QUANTA_PER_TICK};

    fn asset(eta: f64) -> AssetSpec {
        AssetSpec::new("SIM", "1".parse::<TickValue>().unwrap(), eta).unwrap()
    }

    #[test]
    fn schedule_lookup_and_integral() {
        let s = Schedule::piecewise(vec![(0.0, 1.0), (10.0, 2.0), (20.0, 0.0)]).unwrap();
        assert_eq!(s.value_at(0.0), 1.0);
        assert_eq!(s.value_at(9.99), 1.0);
        assert_eq!(s.value_at(10.0), 2.0);
        assert_eq!(s.value_at(25.0), 0.0);
        assert_eq!(s.integral_of_square(15.0), 10.0 + 4.0 * 5.0);
        assert_eq!(s.integral_of_square(30.0), 10.0 + 40.0);
        assert!(Schedule::piecewise(vec![(1.0, 1.0)]).is_err());
        assert!(Schedule::piecewise(vec![(0.0, 1.0), (0.0, 2.0)]).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(EfficientPathSpec::constant(100.0, 0.0, -1.0, 1.0, 0.1)
            .validate()
            .is_err());
        assert!(EfficientPathSpec::constant(100.0, 0.0, 1.0, 1.0, 0.0)
            .validate()
            .is_err());
        assert!(EfficientPathSpec::constant(100.0, 0.0, 1.0, 0.05, 0.1)
            .validate()
            .is_err());
        assert!(simulate_efficient_path(&EfficientPathSpec::constant(100.0, 0.0, 1.0, 1.0, 0.0), 1).is_err());
    }

    #[test]
    fn default_dt_respects_resolution() {
        let a = asset(0.25);
        let spec = EfficientPathSpec::with_default_dt(100.0, 0.0, 0.5, 1000.0, &a).unwrap();
        assert!(0.5 * spec.dt.sqrt() <= 0.25 / 10.0 + 1e-15);
        let flat = EfficientPathSpec::with_default_dt(100.0, 0.0, 0.0, 1000.0, &a).unwrap();
        assert_eq!(flat.dt, 1000.0);
    }

    #[test]
    fn degenerate_diffusion_is_constant() {
        let spec = EfficientPathSpec::constant(100.0, 0.0, 0.0, 10.0, 0.5);
        let path = simulate_efficient_path(&spec, 7).unwrap();
        assert_eq!(path.values().len(), 21);
        assert!(path.values().iter().all(|&x| x == 100.0));
    }

    #[test]
    fn pure_drift_reaches_terminal_value() {
        let t = 250.0;
        let spec = EfficientPathSpec::constant(100.0, 1.0 / t, 0.0, t, 0.1);
        let path = simulate_efficient_path(&spec, 7).unwrap();
        assert!((path.terminal() - 101.0).abs() < 1e-9);
        assert_eq!(path.values()[0], 100.0);
    }

    #[test]
    fn shortened_last_step_ends_at_horizon() {
        let spec = EfficientPathSpec::constant(0.0, 1.0, 0.0, 1.05, 0.1);
        assert_eq!(spec.steps(), 11);
        assert_eq!(spec.time(11), 1.05);
        let path = simulate_efficient_path(&spec, 0).unwrap();
        assert!((path.terminal() - 1.05).abs() < 1e-12);
    }

    #[test]
    fn increments_have_diffusion_variance() {
        // Closed form: Var(X_1 - X_0) = σ² t = 4e-4.
        let spec = EfficientPathSpec::constant(0.0, 0.0, 0.02, 1.0, 0.1);
        let n = 100_000u64;
        let (mut s1, mut s2) = (0.0, 0.0);
        for seed in 0..n {
            let d = simulate_efficient_path(&spec, seed).unwrap().terminal();
            s1 += d;
            s2 += d * d;
        }
        let mean = s1 / n as f64;
        let var = (s2 - n as f64 * mean * mean) / (n as f64 - 1.0);
        assert!((var / 4e-4 - 1.0).abs() < 0.01, "variance {var}");
    }

    #[test]
    fn constant_path_has_no_events() {
        let spec = EfficientPathSpec::constant(100.0, 0.0, 0.0, 10.0, 0.5);
        let path = simulate_efficient_path(&spec, 1).unwrap();
        let events = apply_uncertainty_zones(&path, &asset(0.25), Price::from_ticks(100)).unwrap();
        assert!(events.is_empty());
    }

    #[test]
    fn pure_drift_hits_barriers_in_order() {
        let spec = EfficientPathSpec::constant(100.0, 2.0, 0.0, 1.0, 0.25);
        let path = simulate_efficient_path(&spec, 1).unwrap();
        assert_eq!(path.terminal(), 102.0);
        let events = apply_uncertainty_zones(&path, &asset(0.5), Price::from_ticks(100)).unwrap();
        assert_eq!(events.len(), 2);
        assert_eq!(events[0].new_price, Price::from_ticks(101));
        assert_eq!(events[1].new_price, Price::from_ticks(102));
        assert!(events.iter().all(|e| e.direction == Direction::Up));
        assert!((events[0].time - 0.5).abs() < 1e-12);
        assert!((events[1].time - 1.0).abs() < 1e-12);
        assert_eq!(events[0].efficient_price_at_crossing, 101.0);
    }

    #[test]
    fn off_grid_start_is_rejected() {
        let spec = EfficientPathSpec::constant(100.0, 0.0, 0.0, 1.0, 0.5);
        let path = simulate_efficient_path(&spec, 1).unwrap();
        let err = apply_uncertainty_zones(&path, &asset(0.25), Price::from_quanta(QUANTA_PER_TICK / 2));
        assert!(err.is_err());
        let unknown = AssetSpec::instrument("X", "1".parse().unwrap());
        assert!(apply_uncertainty_zones(&path, &unknown, Price::from_ticks(100)).is_err());
    }

    #[test]
    fn events_are_one_tick_and_path_stays_inside_zone() {
        let a = asset(0.3);
        let spec = EfficientPathSpec::constant(100.0, 0.0, 0.6, 400.0, 0.002);
        let path = simulate_efficient_path(&spec, 11).unwrap();
        let p0 = a.tick.nearest_grid(100.0);
        let events = apply_uncertainty_zones(&path, &a, p0).unwrap();
        assert!(events.len() > 100);

        let mut prev = p0;
        for e in &events {
            assert_eq!((e.new_price - prev).abs(), QUANTA_PER_TICK);
            assert_eq!(e.new_price - prev, e.direction.sign() * QUANTA_PER_TICK);
            let expected = a.tick.to_currency(e.new_price) - e.direction.signum() * (0.5 - 0.3);
            assert!((e.efficient_price_at_crossing - expected).abs() < 1e-9);
            prev = e.new_price;
        }

        // Grid values strictly between two events never touch the barriers of
        // the price in force.
        let half = 0.5 + 0.3;
        let mut current = p0;
        let mut idx = 0;
        for (k, &x) in path.values().iter().enumerate() {
            let t = spec.time(k);
            while idx < events.len() && events[idx].time <= t {
                current = events[idx].new_price;
                idx += 1;
            }
            let p = a.tick.to_currency(current);
            assert!(x > p - half && x < p + half, "step {k}: x={x}, p={p}");
        }
    }

    #[test]
    fn fused_and_composed_routes_agree() {
        let a = asset(0.2);
        let spec = EfficientPathSpec::constant(100.3, 0.001, 0.5, 300.0, 0.004);
        let cfg = TapeConfig::new(2.0, 99);
        let (tape, truth) = simulate_day(&spec, &a, &cfg).unwrap();
        let path = simulate_efficient_path(&spec, 99).unwrap();
        let events = apply_uncertainty_zones(&path, &a, truth.p0).unwrap();
        assert_eq!(events, truth.events);
        let rebuilt = generate_tape(&events, &cfg, &a, spec.horizon, truth.p0).unwrap();
        assert_eq!(rebuilt, tape);
    }

    #[test]
    fn simulate_day_is_deterministic() {
        let a = asset(0.25);
        let spec = EfficientPathSpec::with_default_dt(100.0, 0.0, 0.3, 600.0, &a).unwrap();
        let cfg = TapeConfig::new(1.0, 5);
        let (t1, p1) = simulate_day(&spec, &a, &cfg).unwrap();
        let (t2, p2) = simulate_day(&spec, &a, &cfg).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(p1, p2);
        let (t3, _) = simulate_day(&spec, &a, &TapeConfig::new(1.0, 6)).unwrap();
        assert_ne!(t1, t3);
    }

    #[test]
    fn zero_volatility_day_has_no_changes() {
        let a = asset(0.25);
        let spec = EfficientPathSpec::constant(100.0, 0.0, 0.0, 100.0, 1.0);
        let (tape, truth) = simulate_day(&spec, &a, &TapeConfig::new(0.5, 1)).unwrap();
        assert!(tape.price_changes().is_empty());
        assert_eq!(truth.integrated_variance, 0.0);
        assert!(!tape.is_empty());
    }

    #[test]
    fn zero_intensity_tape_holds_only_price_changes() {
        let a = asset(0.25);
        let spec = EfficientPathSpec::with_default_dt(100.0, 0.0, 0.4, 500.0, &a).unwrap();
        let (tape, truth) = simulate_day(&spec, &a, &TapeConfig::new(0.0, 3)).unwrap();
        assert_eq!(tape.len(), truth.events.len());
        assert!(tape.events().iter().all(|e| e.changed_price()));
        for (e, ev) in tape.events().iter().zip(&truth.events) {
            assert_eq!(e.price, ev.new_price);
            assert_eq!(e.direction, Some(ev.direction));
        }
    }

    #[test]
    fn fill_count_matches_poisson_intensity() {
        // Poisson(λt) with λ = 10, t = 1000: mean 1e4, sd 100.
        let a = asset(0.25);
        let spec = EfficientPathSpec::constant(100.0, 0.0, 0.05, 1000.0, 0.1);
        let (tape, truth) = simulate_day(&spec, &a, &TapeConfig::new(10.0, 2024)).unwrap();
        let fills = (tape.len() - truth.events.len()) as f64;
        assert!((fills - 1e4).abs() <= 300.0, "fills {fills}");
    }

    #[test]
    fn every_simulated_quote_is_one_tick_wide() {
        let a = asset(0.25);
        let spec = EfficientPathSpec::with_default_dt(100.0, 0.0, 0.4, 500.0, &a).unwrap();
        let (tape, _) = simulate_day(&spec, &a, &TapeConfig::new(3.0, 8)).unwrap();
        for e in tape.events() {
            let q = e.quote.expect("simulated trades carry quotes");
            assert_eq!(q.spread_ticks(), 1);
            assert!(q.bid() == e.price || q.ask() == e.price);
        }
    }

    #[test]
    fn invalid_tape_inputs() {
        let a = asset(0.25);
        let p0 = Price::from_ticks(100);
        assert!(generate_tape(&[], &TapeConfig::new(-1.0, 0), &a, 10.0, p0).is_err());
        let late = PriceChangeEvent {
            time: 11.0,
            new_price: p0.offset_ticks(1),
            direction: Direction::Up,
            efficient_price_at_crossing: 100.25,
        };
        assert!(generate_tape(&[late], &TapeConfig::new(0.0, 0), &a, 10.0, p0).is_err());
    }
}

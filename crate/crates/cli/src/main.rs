//! `tickzone` command-line front end.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use tickzone::domain::{AssetSpec, TickValue};
use tickzone::estimators::{build_daily_record, signature_plot};
use tickzone::fixtures;
use tickzone::io::records::{write_fits, write_optimal_ticks, write_signature};
use tickzone::io::{
    ingest_trades, read_daily_records, run_pipeline, write_daily_records, Config, OptimalTickRow, PipelineConfig,
    SessionFilter, SyntheticAsset, SyntheticMarket,
};
use tickzone::regression::{fit_groups, FitOptions};
use tickzone::tick_policy::{predict_eta, FormulaVersion, TickScenario};

#[derive(Parser, Debug)]
#[command(
    name = "tickzone",
    about = "Uncertainty-zone estimation and tick-value analysis for large-tick assets",
    disable_version_flag = true
)]
struct Cli {
    #[command(flatten)]
    global: Global,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Key/value configuration file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (simulate, pipeline) or file (other commands; stdout if absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Session window HH:MM-HH:MM in exchange-local time, or `all`.
    #[arg(long, global = true)]
    session: Option<String>,

    #[arg(long = "tick-value", global = true)]
    tick_value: Option<String>,

    /// Liquidity exponent; 1 (linear) or 0.5 (square root).
    #[arg(long, global = true)]
    beta: Option<f64>,

    /// Formula version 1, 2 or 3.
    #[arg(long = "version", global = true)]
    formula: Option<u8>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate trade tapes into <out>/<asset>/<date>.csv.
    Simulate(SimulateArgs),
    /// Build daily records from trade files.
    Estimate(EstimateArgs),
    /// Fit the spread/volatility regression on a daily-record CSV.
    Regress(RegressArgs),
    /// Forecast η after a tick-value change.
    Predict(PredictArgs),
    /// Optimal tick values for β ∈ {1, 1/2}, all formula versions.
    OptimalTick(OptimalTickArgs),
    /// Signature plot of one trade file.
    Signature(SignatureArgs),
    /// Run ingestion, estimation, regression and scenarios over a directory.
    Pipeline(PipelineArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, default_value = "SIM")]
    asset: String,
    /// η of each day, cycled; comma separated.
    #[arg(long, default_value = "0.25", value_delimiter = ',')]
    eta: Vec<f64>,
    /// Median volatility per second, currency.
    #[arg(long, default_value_t = 0.05)]
    sigma: f64,
    /// Standard deviation of log daily volatility.
    #[arg(long, default_value_t = 0.0)]
    sigma_dispersion: f64,
    /// Session length in seconds.
    #[arg(long, default_value_t = 3600.0)]
    horizon: f64,
    #[arg(long, default_value_t = 1)]
    days: usize,
    #[arg(long, default_value = "2009-06-15")]
    start: NaiveDate,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    /// Trade CSV files of one asset.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    #[arg(long, default_value = "ASSET")]
    asset: String,
    #[arg(long)]
    timezone: Option<String>,
}

#[derive(Args, Debug)]
struct RegressArgs {
    records: PathBuf,
    /// Fit each tick-value regime of an asset separately.
    #[arg(long)]
    split_regimes: bool,
    /// Keep days with η̂ above the flag threshold.
    #[arg(long)]
    include_flagged: bool,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    alpha0: f64,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    eta0: f64,
    #[arg(long, default_value_t = 1.0)]
    p1: f64,
    #[arg(long, default_value_t = 0.0)]
    p2: f64,
    /// Trade count per day before the change.
    #[arg(long)]
    m0: Option<f64>,
    /// Daily volatility before the change, currency.
    #[arg(long)]
    sigma0: Option<f64>,
}

#[derive(Args, Debug)]
struct OptimalTickArgs {
    /// Use the bundled 2009 futures table (all assets, or the named ones).
    #[arg(long, num_args = 0.., value_delimiter = ',')]
    fixture: Option<Vec<String>>,
    #[arg(long)]
    alpha0: Option<f64>,
    #[arg(long)]
    eta0: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    p1: f64,
    #[arg(long, default_value_t = 0.0)]
    p2: f64,
    #[arg(long, default_value = "CUSTOM")]
    asset: String,
}

#[derive(Args, Debug)]
struct SignatureArgs {
    file: PathBuf,
    #[arg(long, default_value = "ASSET")]
    asset: String,
    /// Samples per second.
    #[arg(long, default_value_t = 1.0)]
    rate: f64,
    #[arg(long, default_value_t = 50)]
    delta_max: u32,
    #[arg(long)]
    timezone: Option<String>,
}

#[derive(Args, Debug)]
struct PipelineArgs {
    /// Directory holding <asset>/*.csv trade files.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    split_regimes: bool,
    #[arg(long)]
    include_flagged: bool,
}

fn load_config(g: &Global) -> Result<Config> {
    let mut cfg = match &g.config {
        Some(p) => Config::load(p).with_context(|| format!("reading config {}", p.display()))?,
        None => Config::default(),
    };
    if let Some(s) = g.seed {
        cfg.set("seed", s.to_string());
    }
    if let Some(o) = &g.out {
        cfg.set("out_dir", o.display().to_string());
    }
    if let Some(s) = &g.session {
        cfg.set("session", s.clone());
    }
    if let Some(t) = &g.tick_value {
        cfg.set("tick_value", t.clone());
    }
    if let Some(b) = g.beta {
        cfg.set("beta", b.to_string());
    }
    if let Some(v) = g.formula {
        cfg.set("version", v.to_string());
    }
    Ok(cfg)
}

/// Writes to `--out` when given, stdout otherwise.
fn output(g: &Global) -> Result<Box<dyn Write>> {
    Ok(match &g.out {
        Some(p) => Box::new(io::BufWriter::new(
            fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn formula(cfg: &Config) -> Result<FormulaVersion> {
    let v = cfg.get_parsed::<u8>("version")?.unwrap_or(1);
    Ok(FormulaVersion::try_from(v)?)
}

fn betas(cfg: &Config) -> Result<Vec<f64>> {
    Ok(match cfg.get_parsed::<f64>("beta")? {
        Some(b) => vec![b],
        None => vec![1.0, 0.5],
    })
}

/// Tick value and session for a single asset from flags, config and fixture.
fn asset_settings(cfg: &Config, asset: &str, timezone: Option<&str>) -> Result<(AssetSpec, SessionFilter)> {
    let mut cfg = cfg.clone();
    if cfg.get("input_dir").is_none() {
        cfg.set("input_dir", ".");
    }
    if let Some(tz) = timezone {
        cfg.set("timezone", tz);
    }
    Ok(PipelineConfig::from_config(&cfg)?.asset_settings(asset)?)
}

fn simulate(cfg: &Config, a: &SimulateArgs) -> Result<()> {
    let out = cfg
        .get("out_dir")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("sim"));
    let tick: TickValue = cfg.get("tick_value").unwrap_or("1").parse()?;
    let market = SyntheticMarket {
        assets: vec![SyntheticAsset {
            id: a.asset.clone(),
            tick,
            etas: a.eta.clone(),
            sigma: a.sigma,
        }],
        days: a.days,
        session_secs: a.horizon,
        sigma_dispersion: a.sigma_dispersion,
        seed: cfg.get_parsed("seed")?.unwrap_or(0),
        start: a.start,
    };
    market.write_dataset(&out)?;
    eprintln!("wrote {} day(s) under {}", a.days, out.join(&a.asset).display());
    Ok(())
}

fn estimate(g: &Global, cfg: &Config, a: &EstimateArgs) -> Result<()> {
    let (asset, session) = asset_settings(cfg, &a.asset, a.timezone.as_deref())?;
    let tapes = ingest_trades(&a.files, &asset, &session)?;
    let mut records = Vec::new();
    for t in &tapes {
        match build_daily_record(t) {
            Ok(r) => records.push(r),
            Err(e) if e.is_inactive_day() => log::info!("skipping {} {}: {}", a.asset, t.date(), e.root()),
            Err(e) => return Err(e.into()),
        }
    }
    write_daily_records(&records, output(g)?)?;
    Ok(())
}

fn regress(g: &Global, a: &RegressArgs) -> Result<()> {
    let file = fs::File::open(&a.records).with_context(|| format!("opening {}", a.records.display()))?;
    let records = read_daily_records(file)?;
    let opts = FitOptions {
        split_regimes: a.split_regimes,
        include_flagged: a.include_flagged,
    };
    let mut fits = Vec::new();
    for group in fit_groups(&records, opts) {
        let label = group.label();
        match group.fit {
            Ok(f) => fits.push((label, f)),
            Err(e) => eprintln!("{label}: {e}"),
        }
    }
    if fits.is_empty() {
        bail!("no asset could be fitted");
    }
    write_fits(&fits, output(g)?)?;
    Ok(())
}

fn predict(g: &Global, cfg: &Config, a: &PredictArgs) -> Result<()> {
    let beta = cfg.get_parsed::<f64>("beta")?.unwrap_or(1.0);
    let mut s = TickScenario::new(a.alpha0, a.eta0, a.p1, a.p2, beta).with_new_tick(a.alpha);
    s.m0 = a.m0;
    s.sigma0 = a.sigma0;
    let f = predict_eta(&s, formula(cfg)?)?;
    let mut w = output(g)?;
    writeln!(w, "version: {}", f.version)?;
    writeln!(w, "beta: {beta}")?;
    writeln!(w, "eta_pred: {}", f.eta_pred)?;
    if let Some(m) = f.m_pred {
        writeln!(w, "m_pred: {m}")?;
    }
    writeln!(w, "in_large_tick_regime: {}", f.in_large_tick_regime)?;
    if let Some(msg) = &f.warning {
        writeln!(w, "warning: {msg}")?;
    }
    Ok(())
}

fn optimal(g: &Global, cfg: &Config, a: &OptimalTickArgs) -> Result<()> {
    let betas = betas(cfg)?;
    let mut rows = Vec::new();
    if let Some(names) = &a.fixture {
        let selected: Vec<_> = if names.is_empty() {
            fixtures::futures_2009().iter().collect()
        } else {
            names.iter().map(|n| fixtures::lookup(n)).collect::<Result<_, _>>()?
        };
        for f in selected {
            for &beta in &betas {
                rows.push(OptimalTickRow::compute(
                    f.name.clone(),
                    f.tick.as_f64(),
                    f.eta,
                    f.p1.value,
                    f.p2.value,
                    beta,
                    f.published_optimal_tick(beta),
                ));
            }
        }
    } else {
        let (Some(alpha0), Some(eta0)) = (a.alpha0, a.eta0) else {
            bail!("give --fixture or both --alpha0 and --eta0");
        };
        for &beta in &betas {
            rows.push(OptimalTickRow::compute(
                a.asset.clone(),
                alpha0,
                eta0,
                a.p1,
                a.p2,
                beta,
                None,
            ));
        }
    }
    write_optimal_ticks(&rows, output(g)?)?;
    Ok(())
}

fn signature(g: &Global, cfg: &Config, a: &SignatureArgs) -> Result<()> {
    let (asset, session) = asset_settings(cfg, &a.asset, a.timezone.as_deref())?;
    let tapes = ingest_trades(std::slice::from_ref(&a.file), &asset, &session)?;
    let tape = match tapes.as_slice() {
        [t] => t,
        [] => bail!("{} holds no trades in session {session}", a.file.display()),
        _ => bail!(
            "{} spans {} days; pass a single-day file or a --session",
            a.file.display(),
            tapes.len()
        ),
    };
    write_signature(&signature_plot(tape, a.rate, a.delta_max)?, output(g)?)?;
    Ok(())
}

fn pipeline(cfg: &Config, a: &PipelineArgs) -> Result<()> {
    let mut cfg = cfg.clone();
    if let Some(i) = &a.input {
        cfg.set("input_dir", i.display().to_string());
    }
    if a.split_regimes {
        cfg.set("split_regimes", "true");
    }
    if a.include_flagged {
        cfg.set("include_flagged", "true");
    }
    let pc = PipelineConfig::from_config(&cfg)?;
    let summary = run_pipeline(&pc)?;
    eprintln!(
        "{} daily record(s), {} skipped day(s), {} fit(s)",
        summary.records.len(),
        summary.skipped.len(),
        summary.fits.iter().filter(|f| f.fit.is_ok()).count()
    );
    for p in &summary.outputs {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TICKZONE_LOG", "warn")).init();
    let cli = Cli::parse();
    let cfg = load_config(&cli.global)?;
    let g = &cli.global;
    match &cli.command {
        Command::Simulate(a) => simulate(&cfg, a),
        Command::Estimate(a) => estimate(g, &cfg, a),
        Command::Regress(a) => regress(g, a),
        Command::Predict(a) => predict(g, &cfg, a),
        Command::OptimalTick(a) => optimal(g, &cfg, a),
        Command::Signature(a) => signature(g, &cfg, a),
        Command::Pipeline(a) => pipeline(&cfg, a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("tickzone").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.conf");
        fs::write(&path, "beta = 0.5\ntick_value = 0.25\nseed = 3\n").unwrap();
        let conf = path.display().to_string();
        let cli = parse(&[
            "--config",
            &conf,
            "--tick-value",
            "1",
            "predict",
            "--alpha0",
            "1",
            "--alpha",
            "2",
            "--eta0",
            "0.2",
        ]);
        let cfg = load_config(&cli.global).unwrap();
        assert_eq!(cfg.get("tick_value"), Some("1"));
        assert_eq!(cfg.get("seed"), Some("3"));
        assert_eq!(betas(&cfg).unwrap(), vec![0.5]);
        assert_eq!(formula(&cfg).unwrap(), FormulaVersion::Fitted);
    }

    #[test]
    fn defaults() {
        let cli = parse(&["optimal-tick", "--fixture"]);
        let cfg = load_config(&cli.global).unwrap();
        assert_eq!(betas(&cfg).unwrap(), vec![1.0, 0.5]);
        let (asset, session) = asset_settings(&cfg, "Bund", None).unwrap();
        assert_eq!(asset.tick.to_string(), "10");
        assert_eq!(session.to_string(), "08:00-17:15 Europe/Berlin");
    }
}

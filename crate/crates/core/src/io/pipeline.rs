//! Directory-to-directory batch run: ingest every asset's trade files, build
//! daily records, fit the regression per asset and write the result CSVs.
//!
//! Input layout is `<input_dir>/<asset>/*.csv`. Per-asset settings come from
//! `asset.<id>.tick_value`, `asset.<id>.session` and `asset.<id>.timezone`,
//! then the global `tick_value`, `session` and `timezone` keys, then the
//! bundled futures fixture.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rayon::prelude::*;

use crate::domain::{AssetSpec, TickValue};
use crate::error::{invalid, Error, Result};
use crate::estimators::{build_daily_record, DailyRecord};
use crate::fixtures;
use crate::io::config::Config;
use crate::io::records::{emit_cloud_csv, write_daily_records, write_fits, write_optimal_ticks, OptimalTickRow};
use crate::io::session::SessionFilter;
use crate::io::trades::ingest_trades;
use crate::regression::{fit_groups, FitOptions, GroupFit};
use crate::tick_policy::{optimal_tick, FormulaVersion, TickScenario};

pub const DAILY_RECORDS_FILE: &str = "daily_records.csv";
pub const REGRESSION_FILE: &str = "regression.csv";
pub const CLOUD_RAW_FILE: &str = "cloud_raw.csv";
pub const CLOUD_ADJUSTED_FILE: &str = "cloud_adjusted.csv";
pub const SCENARIOS_FILE: &str = "scenarios.csv";

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub input_dir: PathBuf,
    pub out_dir: PathBuf,
    pub fit: FitOptions,
    pub betas: Vec<f64>,
    /// Source of global and per-asset keys.
    pub settings: Config,
}

impl PipelineConfig {
    pub fn from_config(cfg: &Config) -> Result<Self> {
        let input_dir = cfg
            .get("input_dir")
            .ok_or_else(|| invalid("config needs input_dir"))?
            .into();
        let out_dir = cfg.get("out_dir").unwrap_or("out").into();
        let betas = match cfg.get("beta") {
            Some(list) => list
                .split(',')
                .map(|b| b.trim().parse::<f64>().map_err(|e| invalid(format!("beta {b:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?,
            None => vec![1.0, 0.5],
        };
        Ok(PipelineConfig {
            input_dir,
            out_dir,
            fit: FitOptions {
                split_regimes: cfg.get_bool("split_regimes")?.unwrap_or(false),
                include_flagged: cfg.get_bool("include_flagged")?.unwrap_or(false),
            },
            betas,
            settings: cfg.clone(),
        })
    }

    /// Tick value and session for one asset directory.
    pub fn asset_settings(&self, id: &str) -> Result<(AssetSpec, SessionFilter)> {
        let cfg = &self.settings;
        let fixture = fixtures::lookup(id).ok();
        let tick: TickValue = match cfg.asset_value(id, "tick_value").or(cfg.get("tick_value")) {
            Some(t) => t.parse()?,
            None => fixture
                .map(|f| f.tick)
                .ok_or_else(|| invalid(format!("no tick value configured for asset {id}")))?,
        };
        let session = cfg
            .asset_value(id, "session")
            .or(cfg.get("session"))
            .or(fixture.map(|f| f.session.as_str()))
            .unwrap_or("all");
        let tz = cfg
            .asset_value(id, "timezone")
            .or(cfg.get("timezone"))
            .or(fixture.map(|f| f.timezone.as_str()))
            .unwrap_or("UTC");
        Ok((AssetSpec::instrument(id, tick), SessionFilter::parse(session, tz)?))
    }
}

#[derive(Debug)]
pub struct PipelineSummary {
    pub records: Vec<DailyRecord>,
    /// Asset-days without enough activity, with the reason.
    pub skipped: Vec<(String, NaiveDate, String)>,
    pub fits: Vec<GroupFit>,
    pub outputs: Vec<PathBuf>,
}

fn discover(input_dir: &Path) -> Result<Vec<(String, Vec<PathBuf>)>> {
    let entries = fs::read_dir(input_dir).map_err(|e| Error::NoInput(format!("{}: {e}", input_dir.display())))?;
    let mut assets = Vec::new();
    for entry in entries {
        let path = entry?.path();
        if !path.is_dir() {
            continue;
        }
        let mut files: Vec<PathBuf> = fs::read_dir(&path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        if files.is_empty() {
            continue;
        }
        files.sort();
        let id = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        assets.push((id, files));
    }
    assets.sort();
    if assets.is_empty() {
        return Err(Error::NoInput(format!(
            "no <asset>/*.csv trade files under {}",
            input_dir.display()
        )));
    }
    Ok(assets)
}

fn scenario_rows(records: &[DailyRecord], fits: &[GroupFit], opts: FitOptions, betas: &[f64]) -> Vec<OptimalTickRow> {
    let mut rows = Vec::new();
    for g in fits {
        let Ok(fit) = &g.fit else { continue };
        let group: Vec<&DailyRecord> = records
            .iter()
            .filter(|r| r.asset_id == g.asset_id)
            .filter(|r| g.alpha.map_or(true, |a| a.to_bits() == r.alpha.to_bits()))
            .filter(|r| opts.include_flagged || !r.is_flagged())
            .collect();
        let Some(last) = group.last() else { continue };
        let eta0 = group.iter().map(|r| r.eta_hat).sum::<f64>() / group.len() as f64;
        let tick = g.alpha.unwrap_or(last.alpha);
        for &beta in betas {
            rows.push(OptimalTickRow::compute(
                g.label(),
                tick,
                eta0,
                fit.p1.value,
                fit.p2.value,
                beta,
                None,
            ));
        }
    }
    rows
}

impl OptimalTickRow {
    /// Evaluates all three formula versions; undefined ones are left empty.
    pub fn compute(asset: String, tick: f64, eta0: f64, p1: f64, p2: f64, beta: f64, published: Option<f64>) -> Self {
        let s = TickScenario::new(tick, eta0, p1, p2, beta);
        let versions = FormulaVersion::ALL.map(|v| optimal_tick(&s, v).ok());
        OptimalTickRow {
            asset,
            tick_value: tick,
            eta0,
            p1,
            p2,
            beta,
            versions,
            published,
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path)?))
}

pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineSummary> {
    let assets = discover(&cfg.input_dir)?;

    let mut tapes = Vec::new();
    for (id, files) in &assets {
        let (asset, session) = cfg.asset_settings(id)?;
        log::info!("{id}: {} file(s), tick {}, session {session}", files.len(), asset.tick);
        tapes.extend(ingest_trades(files, &asset, &session)?);
    }

    let outcomes: Vec<_> = tapes
        .par_iter()
        .map(|t| (t.asset().asset_id.clone(), t.date(), build_daily_record(t)))
        .collect();

    let mut records = Vec::new();
    let mut skipped = Vec::new();
    let mut failures = Vec::new();
    for (asset, date, outcome) in outcomes {
        match outcome {
            Ok(r) => records.push(r),
            Err(e) if e.is_inactive_day() => {
                log::info!("skipping {asset} {date}: {}", e.root());
                skipped.push((asset, date, e.root().to_string()));
            }
            Err(e) => failures.push(e),
        }
    }
    if !failures.is_empty() {
        return Err(Error::Multiple(failures));
    }

    let fits = fit_groups(&records, cfg.fit);
    for g in &fits {
        if let Err(e) = &g.fit {
            log::warn!("{}: no fit: {e}", g.label());
        }
    }
    let ok_fits: Vec<(String, _)> = fits
        .iter()
        .filter_map(|g| g.fit.as_ref().ok().map(|f| (g.label(), f.clone())))
        .collect();

    fs::create_dir_all(&cfg.out_dir)?;
    let out = |name: &str| cfg.out_dir.join(name);
    write_daily_records(&records, create(&out(DAILY_RECORDS_FILE))?)?;
    write_fits(&ok_fits, create(&out(REGRESSION_FILE))?)?;
    emit_cloud_csv(
        &records,
        &fits,
        create(&out(CLOUD_RAW_FILE))?,
        create(&out(CLOUD_ADJUSTED_FILE))?,
    )?;
    write_optimal_ticks(
        &scenario_rows(&records, &fits, cfg.fit, &cfg.betas),
        create(&out(SCENARIOS_FILE))?,
    )?;

    let counts: BTreeMap<&str, usize> = records.iter().fold(BTreeMap::new(), |mut m, r| {
        *m.entry(r.asset_id.as_str()).or_default() += 1;
        m
    });
    for (a, n) in counts {
        log::info!("{a}: {n} daily record(s)");
    }

    Ok(PipelineSummary {
        outputs: [
            DAILY_RECORDS_FILE,
            REGRESSION_FILE,
            CLOUD_RAW_FILE,
            CLOUD_ADJUSTED_FILE,
            SCENARIOS_FILE,
        ]
        .iter()
        .map(|f| out(f))
        .collect(),
        records,
        skipped,
        fits,
    })
}

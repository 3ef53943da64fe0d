//! Trade CSV files: `timestamp_ms,price,size,bid,ask`, optionally preceded by
//! `# key=value` metadata lines. Timestamps are UTC milliseconds since the
//! epoch; prices are exact decimals on the tick grid.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rayon::prelude::*;

use crate::domain::{AssetSpec, Price, Print, Quote, TapeHeader, TickValue, TradeTape};
use crate::error::{Error, Result};
use crate::io::session::SessionFilter;

pub const TRADE_HEADER: [&str; 5] = ["timestamp_ms", "price", "size", "bid", "ask"];

/// One parsed row; `print.time_ms` holds the absolute timestamp.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TradeRow {
    pub line: u64,
    pub print: Print,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FileMeta {
    pub values: BTreeMap<String, String>,
}

impl FileMeta {
    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|e| Error::InvalidParameter(format!("metadata {key}={v:?}: {e}")))
            })
            .transpose()
    }

    pub fn date(&self) -> Result<Option<NaiveDate>> {
        self.parsed("date")
    }

    /// Session open and length in milliseconds, when both are recorded.
    pub fn session(&self) -> Result<Option<(i64, i64)>> {
        Ok(self
            .parsed::<i64>("session_open_ms")?
            .zip(self.parsed::<i64>("session_length_ms")?))
    }

    pub fn open_price(&self, tick: TickValue) -> Result<Option<Price>> {
        self.get("open_price").map(|v| tick.parse_grid_price(v)).transpose()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TradeFile {
    pub path: PathBuf,
    pub meta: FileMeta,
    pub rows: Vec<TradeRow>,
}

pub fn read_trade_file(path: &Path, tick: TickValue) -> Result<TradeFile> {
    let text = fs::read_to_string(path)?;
    parse_trade_csv(&text, path, tick)
}

pub fn parse_trade_csv(text: &str, path: &Path, tick: TickValue) -> Result<TradeFile> {
    let label = path.display().to_string();
    let row_err = |line: u64, message: String| Error::Row {
        path: label.clone(),
        line,
        message,
    };

    let mut meta = FileMeta::default();
    for line in text.lines() {
        let Some(rest) = line.trim_start().strip_prefix('#') else {
            break;
        };
        if let Some((k, v)) = rest.split_once('=') {
            meta.values.insert(k.trim().to_string(), v.trim().to_string());
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.iter().ne(TRADE_HEADER) {
        let line = reader.position().line();
        return Err(row_err(
            line,
            format!(
                "expected header {:?}, found {:?}",
                TRADE_HEADER.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }

    let mut rows = Vec::new();
    let mut last_ts = i64::MIN;
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(i).unwrap_or("");
        let timestamp_ms: i64 = field(0)
            .parse()
            .map_err(|e| row_err(line, format!("bad timestamp {:?}: {e}", field(0))))?;
        if timestamp_ms < last_ts {
            return Err(row_err(line, format!("timestamp {timestamp_ms} decreases")));
        }
        last_ts = timestamp_ms;
        let price = tick
            .parse_grid_price(field(1))
            .map_err(|e| row_err(line, e.to_string()))?;
        let size: u64 = field(2)
            .parse()
            .map_err(|e| row_err(line, format!("bad size {:?}: {e}", field(2))))?;
        let quote = match (field(3), field(4)) {
            ("", "") => None,
            ("", _) | (_, "") => return Err(row_err(line, "bid and ask must both be present or both empty".into())),
            (b, a) => {
                let bid = tick.parse_grid_price(b).map_err(|e| row_err(line, e.to_string()))?;
                let ask = tick.parse_grid_price(a).map_err(|e| row_err(line, e.to_string()))?;
                Some(Quote::new(bid, ask).map_err(|e| row_err(line, e.to_string()))?)
            }
        };
        rows.push(TradeRow {
            line,
            print: Print {
                time_ms: timestamp_ms,
                price,
                size,
                quote,
            },
        });
    }
    Ok(TradeFile {
        path: path.to_path_buf(),
        meta,
        rows,
    })
}

/// Writes a tape with its session metadata so that it can be ingested back
/// into an identical tape.
pub fn write_trade_csv<W: Write>(tape: &TradeTape, mut w: W) -> Result<()> {
    let h = tape.header();
    let tick = h.asset.tick;
    writeln!(w, "# asset={}", h.asset.asset_id)?;
    writeln!(w, "# tick_value={tick}")?;
    writeln!(w, "# date={}", h.date)?;
    writeln!(w, "# session_open_ms={}", h.session_open_ms)?;
    writeln!(w, "# session_length_ms={}", h.session_length_ms)?;
    if let Some(p) = h.open_price {
        writeln!(w, "# open_price={}", tick.to_decimal(p))?;
    }
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(TRADE_HEADER)?;
    for e in tape.events() {
        let (bid, ask) = match e.quote {
            Some(q) => (
                tick.to_decimal(q.bid()).to_string(),
                tick.to_decimal(q.ask()).to_string(),
            ),
            None => (String::new(), String::new()),
        };
        csv.write_record([
            (h.session_open_ms + e.time_ms).to_string(),
            tick.to_decimal(e.price).to_string(),
            e.size.to_string(),
            bid,
            ask,
        ])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_trade_file(tape: &TradeTape, path: &Path) -> Result<()> {
    let file = fs::File::create(path)?;
    write_trade_csv(tape, std::io::BufWriter::new(file))
}

struct DayCandidate {
    date: NaiveDate,
    open_ms: i64,
    length_ms: i64,
    open_price: Option<Price>,
    prints: Vec<Print>,
}

fn split_days(file: &TradeFile, asset: &AssetSpec, session: &SessionFilter) -> Result<Vec<DayCandidate>> {
    let meta_date = file.meta.date()?;
    let meta_open = file.meta.open_price(asset.tick)?;
    let relative = |rows: &[&TradeRow], open_ms: i64| -> Vec<Print> {
        rows.iter()
            .map(|r| Print {
                time_ms: r.print.time_ms - open_ms,
                ..r.print
            })
            .collect()
    };

    // A file that records its own session is taken as one day unless an
    // explicit window is requested.
    if session.window.is_none() {
        if let (Some(date), Some((open_ms, length_ms))) = (meta_date, file.meta.session()?) {
            let rows: Vec<&TradeRow> = file
                .rows
                .iter()
                .filter(|r| r.print.time_ms >= open_ms && r.print.time_ms < open_ms + length_ms)
                .collect();
            return Ok(vec![DayCandidate {
                date,
                open_ms,
                length_ms,
                open_price: meta_open,
                prints: relative(&rows, open_ms),
            }]);
        }
    }

    let mut by_date: BTreeMap<NaiveDate, Vec<&TradeRow>> = BTreeMap::new();
    for r in &file.rows {
        if let Some(d) = session.local_date(r.print.time_ms) {
            by_date.entry(d).or_default().push(r);
        }
    }
    let mut days = Vec::new();
    for (date, rows) in by_date {
        let (open_ms, close_ms) = session.bounds(date)?;
        let inside: Vec<&TradeRow> = rows
            .into_iter()
            .filter(|r| r.print.time_ms >= open_ms && r.print.time_ms < close_ms)
            .collect();
        if inside.is_empty() {
            log::warn!(
                "{}: no trades inside session {session} on {date}, skipped",
                file.path.display()
            );
            continue;
        }
        days.push(DayCandidate {
            date,
            open_ms,
            length_ms: close_ms - open_ms,
            open_price: meta_open.filter(|_| meta_date == Some(date)),
            prints: relative(&inside, open_ms),
        });
    }
    Ok(days)
}

/// Reads trade files for one asset and returns one tape per day, ordered by
/// date. When several files cover the same day (e.g. contract maturities),
/// the one with the most trades that day is kept.
pub fn ingest_trades(paths: &[PathBuf], asset: &AssetSpec, session: &SessionFilter) -> Result<Vec<TradeTape>> {
    let files: Vec<TradeFile> = paths
        .par_iter()
        .map(|p| read_trade_file(p, asset.tick))
        .collect::<Result<_>>()?;

    let mut chosen: BTreeMap<NaiveDate, (usize, DayCandidate)> = BTreeMap::new();
    for (idx, file) in files.iter().enumerate() {
        for day in split_days(file, asset, session)? {
            match chosen.get(&day.date) {
                Some((_, best)) if best.prints.len() >= day.prints.len() => {
                    log::info!(
                        "{} {}: keeping {} trades over {} ({})",
                        asset.asset_id,
                        day.date,
                        best.prints.len(),
                        day.prints.len(),
                        file.path.display()
                    );
                }
                _ => {
                    chosen.insert(day.date, (idx, day));
                }
            }
        }
    }

    chosen
        .into_values()
        .map(|(idx, day)| {
            let header = TapeHeader {
                asset: asset.clone(),
                date: day.date,
                session_open_ms: day.open_ms,
                session_length_ms: day.length_ms,
                open_price: day.open_price,
            };
            TradeTape::from_prints(header, day.prints).map_err(|e| Error::Row {
                path: files[idx].path.display().to_string(),
                line: 0,
                message: e.to_string(),
            })
        })
        .collect()
}

//! CSV formats for daily records, regression fits, clouds, signature curves
//! and optimal-tick tables. Floats are written in shortest round-trip form.

use std::io::{Read, Write};

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::estimators::{DailyRecord, SignatureCurve};
use crate::regression::{GroupFit, RegressionFit};

pub const DAILY_HEADER: [&str; 13] = [
    "date",
    "asset",
    "eta_hat",
    "alpha",
    "sigma_hat",
    "m_trades",
    "avg_spread",
    "frac_one_tick",
    "vol_per_trade",
    "implicit_spread",
    "market_order_cost",
    "mm_pnl",
    "flagged",
];

pub const FIT_HEADER: [&str; 11] = [
    "asset", "p1", "p1_lo", "p1_hi", "p2", "p2_lo", "p2_hi", "p3", "p3_lo", "p3_hi", "r2",
];

pub const CLOUD_HEADER: [&str; 3] = ["x", "y", "ref"];

pub const OPTIMAL_TICK_HEADER: [&str; 10] = [
    "asset",
    "tick_value",
    "eta0",
    "p1",
    "p2",
    "beta",
    "v1",
    "v2",
    "v3",
    "published",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_daily_records<W: Write>(records: &[DailyRecord], w: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(DAILY_HEADER)?;
    for r in records {
        // Diagnostics use the raw η̂ and c = 2.
        let cost = r.alpha / 2.0 - r.implicit_half_spread();
        let pnl = r.avg_spread / 2.0 - r.vol_per_trade();
        csv.write_record([
            r.date.to_string(),
            r.asset_id.clone(),
            r.eta_hat.to_string(),
            r.alpha.to_string(),
            r.sigma_hat.to_string(),
            r.m_trades.to_string(),
            r.avg_spread.to_string(),
            r.frac_one_tick.to_string(),
            r.vol_per_trade().to_string(),
            r.implicit_half_spread().to_string(),
            cost.to_string(),
            pnl.to_string(),
            (r.is_flagged() as u8).to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn read_daily_records<R: Read>(r: R) -> Result<Vec<DailyRecord>> {
    let mut csv = csv::Reader::from_reader(r);
    let headers = csv.headers()?.clone();
    if headers.iter().take(8).ne(DAILY_HEADER.iter().take(8).copied()) {
        return Err(Error::InvalidParameter(format!(
            "daily record header must start with {}",
            DAILY_HEADER[..8].join(",")
        )));
    }
    let mut out = Vec::new();
    for rec in csv.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |what: &str, v: &str| Error::Row {
            path: "daily records".into(),
            line,
            message: format!("bad {what} {v:?}"),
        };
        let f = |i: usize| -> Result<f64> {
            let v = rec.get(i).unwrap_or("");
            v.parse().map_err(|_| bad(DAILY_HEADER[i], v))
        };
        let date_s = rec.get(0).unwrap_or("");
        let m_s = rec.get(5).unwrap_or("");
        out.push(DailyRecord {
            date: date_s.parse::<NaiveDate>().map_err(|_| bad("date", date_s))?,
            asset_id: rec.get(1).unwrap_or("").to_string(),
            eta_hat: f(2)?,
            alpha: f(3)?,
            sigma_hat: f(4)?,
            m_trades: m_s.parse().map_err(|_| bad("m_trades", m_s))?,
            avg_spread: f(6)?,
            frac_one_tick: f(7)?,
        });
    }
    Ok(out)
}

pub fn write_fits<W: Write>(fits: &[(String, RegressionFit)], w: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(FIT_HEADER)?;
    for (label, f) in fits {
        let mut row = vec![label.clone()];
        for c in [f.p1, f.p2, f.p3] {
            row.extend([c.value.to_string(), c.lo.to_string(), c.hi.to_string()]);
        }
        row.push(f.r2.to_string());
        csv.write_record(row)?;
    }
    csv.flush()?;
    Ok(())
}

fn fit_for<'a>(record: &DailyRecord, fits: &'a [GroupFit]) -> Option<&'a RegressionFit> {
    fits.iter()
        .find(|g| g.asset_id == record.asset_id && g.alpha.map_or(true, |a| a.to_bits() == record.alpha.to_bits()))
        .and_then(|g| g.fit.as_ref().ok())
}

/// Raw cloud `(η̂α√M, σ̂)` for every record, and adjusted cloud
/// `(p₁η̂α√M, σ̂ − p₂S√M)` for records whose group has a fit. The `ref`
/// column repeats `x`, tracing the line y = x.
pub fn emit_cloud_csv<W1: Write, W2: Write>(
    records: &[DailyRecord],
    fits: &[GroupFit],
    raw: W1,
    adjusted: W2,
) -> Result<()> {
    let mut raw = csv::Writer::from_writer(raw);
    let mut adj = csv::Writer::from_writer(adjusted);
    raw.write_record(CLOUD_HEADER)?;
    adj.write_record(CLOUD_HEADER)?;
    for r in records {
        let x = r.implicit_term();
        raw.write_record([x.to_string(), r.sigma_hat.to_string(), x.to_string()])?;
        if let Some(f) = fit_for(r, fits) {
            let x = f.p1.value * r.implicit_term();
            let y = r.sigma_hat - f.p2.value * r.spread_term();
            adj.write_record([x.to_string(), y.to_string(), x.to_string()])?;
        }
    }
    raw.flush()?;
    adj.flush()?;
    Ok(())
}

pub fn write_signature<W: Write>(curve: &SignatureCurve, w: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["delta", "seconds", "realized_variance"])?;
    for (&d, &v) in &curve.points {
        csv.write_record([
            d.to_string(),
            (d as f64 / curve.sampling_rate).to_string(),
            v.to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimalTickRow {
    pub asset: String,
    pub tick_value: f64,
    pub eta0: f64,
    pub p1: f64,
    pub p2: f64,
    pub beta: f64,
    /// Optimal tick per formula version; `None` where a version is undefined.
    pub versions: [Option<f64>; 3],
    pub published: Option<f64>,
}

pub fn write_optimal_ticks<W: Write>(rows: &[OptimalTickRow], w: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(OPTIMAL_TICK_HEADER)?;
    for r in rows {
        csv.write_record([
            r.asset.clone(),
            r.tick_value.to_string(),
            r.eta0.to_string(),
            r.p1.to_string(),
            r.p2.to_string(),
            r.beta.to_string(),
            opt(r.versions[0]),
            opt(r.versions[1]),
            opt(r.versions[2]),
            opt(r.published),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regression::{fit_groups, FitOptions};

    fn rec(asset: &str, eta: f64, m: u64, s: f64, sigma: f64) -> DailyRecord {
        DailyRecord {
            date: NaiveDate::from_ymd_opt(2009, 6, 15).unwrap(),
            asset_id: asset.into(),
            eta_hat: eta,
            alpha: 0.5,
            sigma_hat: sigma,
            m_trades: m,
            avg_spread: s,
            frac_one_tick: 97.5,
        }
    }

    #[test]
    fn daily_round_trip_is_exact() {
        let recs = vec![
            rec("A", 1.0 / 3.0, 1234, 0.51234567, std::f64::consts::PI),
            rec("B", 0.6, 7, 0.5, 1e-300),
        ];
        let mut buf = Vec::new();
        write_daily_records(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(&DAILY_HEADER.join(",")));
        assert!(text.lines().nth(2).unwrap().ends_with(",1"));
        let back = read_daily_records(buf.as_slice()).unwrap();
        assert_eq!(back, recs);
    }

    #[test]
    fn daily_reader_rejects_bad_rows() {
        let text = "date,asset,eta_hat,alpha,sigma_hat,m_trades,avg_spread,frac_one_tick\n2009-06-15,A,x,1,1,1,1,1\n";
        assert!(matches!(
            read_daily_records(text.as_bytes()),
            Err(Error::Row { line: 2, .. })
        ));
        assert!(read_daily_records("a,b\n".as_bytes()).is_err());
    }

    #[test]
    fn single_point_on_diagonal() {
        let r = rec("A", 0.25, 10_000, 0.5, 0.25 * 0.5 * 100.0);
        let mut raw = Vec::new();
        emit_cloud_csv(&[r], &[], &mut raw, Vec::new()).unwrap();
        let text = String::from_utf8(raw).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,y,ref"));
        let v: Vec<f64> = lines.next().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(v[0], v[1]);
        assert_eq!(v[0], v[2]);
    }

    #[test]
    fn adjusted_cloud_on_diagonal_for_exact_fit() {
        let recs: Vec<_> = (0..20)
            .map(|i| {
                let mut r = rec(
                    "A",
                    0.05 + 0.02 * i as f64,
                    1000 + 137 * i,
                    0.5 + 0.01 * (i % 7) as f64,
                    0.0,
                );
                r.sigma_hat = 0.95 * r.implicit_term() + 0.12 * r.spread_term();
                r
            })
            .collect();
        let fits = fit_groups(&recs, FitOptions::default());
        let mut adj = Vec::new();
        emit_cloud_csv(&recs, &fits, Vec::new(), &mut adj).unwrap();
        let text = String::from_utf8(adj).unwrap();
        assert_eq!(text.lines().count(), 21);
        for line in text.lines().skip(1) {
            let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
            assert!((v[0] - v[1]).abs() <= 1e-9 * v[0].abs().max(1.0), "{line}");
        }
    }

    #[test]
    fn fit_table_columns() {
        let recs: Vec<_> = (0..6)
            .map(|i| {
                rec(
                    "A",
                    0.1 + 0.05 * i as f64,
                    100 + 50 * i * i,
                    0.5 + 0.1 * i as f64,
                    1.0 + i as f64,
                )
            })
            .collect();
        let fit = crate::regression::fit_spread_vol(&recs).unwrap();
        let mut buf = Vec::new();
        write_fits(&[("A".into(), fit)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), FIT_HEADER.join(","));
        assert_eq!(text.lines().nth(1).unwrap().split(',').count(), 11);
    }
}

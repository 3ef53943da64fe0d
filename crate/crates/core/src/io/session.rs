//! Trading-session windows in exchange-local time.

use std::fmt;

use chrono::{DateTime, NaiveDate, NaiveTime, TimeZone};
use chrono_tz::Tz;

use crate::error::{invalid, Result};

/// A daily `[open, close)` window interpreted in `tz`, or the whole local
/// calendar day when `window` is `None`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SessionFilter {
    pub window: Option<(NaiveTime, NaiveTime)>,
    pub tz: Tz,
}

impl Default for SessionFilter {
    fn default() -> Self {
        Self::all_day(Tz::UTC)
    }
}

impl SessionFilter {
    pub fn all_day(tz: Tz) -> Self {
        SessionFilter { window: None, tz }
    }

    pub fn new(open: NaiveTime, close: NaiveTime, tz: Tz) -> Result<Self> {
        if open >= close {
            return Err(invalid(format!("session open {open} must precede close {close}")));
        }
        Ok(SessionFilter {
            window: Some((open, close)),
            tz,
        })
    }

    /// Parses `HH:MM-HH:MM` (or `all`) with an IANA timezone name.
    pub fn parse(window: &str, tz: &str) -> Result<Self> {
        let tz: Tz = tz
            .trim()
            .parse()
            .map_err(|e| invalid(format!("unknown timezone {tz:?}: {e}")))?;
        let window = window.trim();
        if window.eq_ignore_ascii_case("all") || window.is_empty() {
            return Ok(Self::all_day(tz));
        }
        let (a, b) = window
            .split_once('-')
            .ok_or_else(|| invalid(format!("session {window:?} is not HH:MM-HH:MM")))?;
        let time = |s: &str| {
            NaiveTime::parse_from_str(s.trim(), "%H:%M").map_err(|e| invalid(format!("bad session time {s:?}: {e}")))
        };
        Self::new(time(a)?, time(b)?, tz)
    }

    /// UTC milliseconds `[open, close)` of the session on a local date.
    pub fn bounds(&self, date: NaiveDate) -> Result<(i64, i64)> {
        let (open, close) = match self.window {
            Some((o, c)) => (date.and_time(o), date.and_time(c)),
            None => {
                let next = date.succ_opt().ok_or_else(|| invalid("date out of range"))?;
                (date.and_time(NaiveTime::MIN), next.and_time(NaiveTime::MIN))
            }
        };
        let utc = |t: chrono::NaiveDateTime| {
            self.tz
                .from_local_datetime(&t)
                .earliest()
                .map(|d| d.timestamp_millis())
                .ok_or_else(|| invalid(format!("local time {t} does not exist in {}", self.tz)))
        };
        Ok((utc(open)?, utc(close)?))
    }

    pub fn local_date(&self, timestamp_ms: i64) -> Option<NaiveDate> {
        DateTime::from_timestamp_millis(timestamp_ms).map(|d| d.with_timezone(&self.tz).date_naive())
    }
}

impl fmt::Display for SessionFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.window {
            Some((o, c)) => write!(f, "{}-{} {}", o.format("%H:%M"), c.format("%H:%M"), self.tz),
            None => write!(f, "all {}", self.tz),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    #[test]
    fn parse_and_bounds() {
        let s = SessionFilter::parse("08:00-17:15", "Europe/Berlin").unwrap();
        let (o, c) = s.bounds(d(2009, 6, 15)).unwrap();
        // CEST is UTC+2.
        let expect = d(2009, 6, 15)
            .and_hms_opt(6, 0, 0)
            .unwrap()
            .and_utc()
            .timestamp_millis();
        assert_eq!(o, expect);
        assert_eq!(c - o, (9 * 60 + 15) * 60_000);
        assert_eq!(s.to_string(), "08:00-17:15 Europe/Berlin");
    }

    #[test]
    fn winter_offset() {
        let s = SessionFilter::parse("07:20-14:00", "America/Chicago").unwrap();
        let (o, _) = s.bounds(d(2009, 1, 15)).unwrap();
        let expect = d(2009, 1, 15)
            .and_hms_opt(13, 20, 0)
            .unwrap()
            .and_utc()
            .timestamp_millis();
        assert_eq!(o, expect);
    }

    #[test]
    fn all_day() {
        let s = SessionFilter::parse("all", "UTC").unwrap();
        let (o, c) = s.bounds(d(2009, 6, 15)).unwrap();
        assert_eq!(c - o, 86_400_000);
        assert_eq!(s.local_date(o), Some(d(2009, 6, 15)));
        assert_eq!(s.local_date(c - 1), Some(d(2009, 6, 15)));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SessionFilter::parse("17:00-08:00", "UTC").is_err());
        assert!(SessionFilter::parse("08:00", "UTC").is_err());
        assert!(SessionFilter::parse("8h-9h", "UTC").is_err());
        assert!(SessionFilter::parse("08:00-09:00", "Mars/Olympus").is_err());
    }
}

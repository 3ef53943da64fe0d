//! Plain-text `key = value` configuration. Blank lines and lines starting
//! with `#` are ignored; later assignments win, and [`Config::set`] lets
//! command-line flags override file values.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Row {
                path: "config".into(),
                line: i as u64 + 1,
                message: format!("expected key = value, got {line:?}"),
            })?;
            values.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Config { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.values.insert(key.into(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get_parsed<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse().map_err(|e| invalid(format!("config {key} = {v:?}: {e}"))))
            .transpose()
    }

    pub fn get_bool(&self, key: &str) -> Result<Option<bool>> {
        self.get(key)
            .map(|v| match v.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" | "on" => Ok(true),
                "false" | "no" | "0" | "off" => Ok(false),
                _ => Err(invalid(format!("config {key} = {v:?} is not a boolean"))),
            })
            .transpose()
    }

    /// Per-asset key `asset.<id>.<field>`.
    pub fn asset_value(&self, asset: &str, field: &str) -> Option<&str> {
        self.get(&format!("asset.{asset}.{field}"))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Renders the configuration back to `key = value` lines.
    pub fn render(&self) -> String {
        self.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

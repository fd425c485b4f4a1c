//! Flat `key = value` configuration files with dotted keys.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use anyhow::{bail, Context, Result};

/// Parsed configuration, ordered by key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    /// Parses `key = value` lines; `#` starts a comment, blank lines are
    /// skipped, and a key may appear only once.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                bail!("line {}: expected `key = value`, got `{}`", n + 1, raw.trim());
            };
            let key = k.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                bail!("line {}: bad key `{key}`", n + 1);
            }
            if entries.insert(key.to_owned(), v.trim().to_owned()).is_some() {
                bail!("line {}: `{key}` is set twice", n + 1);
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_owned(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Overlays `other` onto `self`.
    pub fn merge(&mut self, other: &Config) {
        for (k, v) in other.iter() {
            self.set(k, v);
        }
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

pub fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse()
        .with_context(|| format!("`{key}`: not a number: `{v}`"))
}

pub fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.trim()
        .parse()
        .with_context(|| format!("`{key}`: not a non-negative integer: `{v}`"))
}

pub fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => bail!("`{key}`: expected true or false, got `{other}`"),
    }
}

/// Comma-separated list.
pub fn parse_list<T>(key: &str, v: &str, item: impl Fn(&str, &str) -> Result<T>) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| item(key, s))
        .collect()
}

pub fn parse_u64(key: &str, v: &str) -> Result<u64> {
    v.trim()
        .parse()
        .with_context(|| format!("`{key}`: not a seed: `{v}`"))
}

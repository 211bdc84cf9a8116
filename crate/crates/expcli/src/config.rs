//! Flat `key = value` configuration with `[section]` prefixes.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    /// Parses lines `key = value`; a `[section]` header prefixes following
    /// keys with `section.`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| anyhow!("line {}: unterminated section header", no + 1))?.trim();
                if name.is_empty() || name.contains(char::is_whitespace) {
                    bail!("line {}: invalid section name {name:?}", no + 1);
                }
                section = format!("{name}.");
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected `key = value`", no + 1))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || k.contains(char::is_whitespace) {
                bail!("line {}: invalid key {k:?}", no + 1);
            }
            if entries.insert(format!("{section}{k}"), v.to_string()).is_some() {
                bail!("line {}: duplicate key {section}{k}", no + 1);
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    /// Rejects keys outside `allowed`.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for k in self.entries.keys() {
            if !allowed.contains(&k.as_str()) {
                bail!("unknown configuration key `{k}` (allowed: {})", allowed.join(", "));
            }
        }
        Ok(())
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e| anyhow!("`{key}` = {v:?}: {e}")),
        }
    }

    pub fn get_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.entries.get(key).map(|v| v.parse().map_err(|e| anyhow!("`{key}` = {v:?}: {e}"))).transpose()
    }

    /// Comma-separated list.
    pub fn get_list<T: FromStr + Clone>(&self, key: &str, default: &[T]) -> Result<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => parse_list(v).with_context(|| format!("`{key}`")),
        }
    }

    /// A float within `[lo, hi]`.
    pub fn get_in(&self, key: &str, default: f64, lo: f64, hi: f64) -> Result<f64> {
        let v = self.get(key, default)?;
        in_range(key, v, lo, hi)
    }

    pub fn get_list_in(&self, key: &str, default: &[f64], lo: f64, hi: f64) -> Result<Vec<f64>> {
        let v = self.get_list(key, default)?;
        if v.is_empty() {
            bail!("`{key}` must not be empty");
        }
        v.into_iter().map(|x| in_range(key, x, lo, hi)).collect()
    }
}

fn in_range(key: &str, v: f64, lo: f64, hi: f64) -> Result<f64> {
    if !(v >= lo && v <= hi) {
        bail!("`{key}` = {v} outside [{lo}, {hi}]");
    }
    Ok(v)
}

pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(|t| t.parse().map_err(|e| anyhow!("{t:?}: {e}"))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_prefix_keys() {
        let c = Config::parse("k = 2 # wave number\n[fem]\nh = 0.02\nhs = 0.04, 0.02\n\n[out]\nname=x\n").unwrap();
        assert_eq!(c.get("k", 0.0).unwrap(), 2.0);
        assert_eq!(c.get("fem.h", 0.0).unwrap(), 0.02);
        assert_eq!(c.get_list("fem.hs", &[1.0]).unwrap(), vec![0.04, 0.02]);
        assert_eq!(c.get("out.name", String::new()).unwrap(), "x");
        assert_eq!(c.get("missing", 7usize).unwrap(), 7);
    }

    #[test]
    fn malformed_input_is_rejected() {
        assert!(Config::parse("k 2").is_err());
        assert!(Config::parse("[fem\nh=1").is_err());
        assert!(Config::parse("a = 1\na = 2").is_err());
        let c = Config::parse("k = two").unwrap();
        assert!(c.get("k", 1.0).is_err());
        assert!(c.check_keys(&["h"]).is_err());
        let c = Config::parse("k = 99").unwrap();
        assert!(c.get_in("k", 1.0, 0.0, 50.0).is_err());
    }
}

//! Flat `key = value` config files. Blank lines and `#` comments are
//! ignored; keys are the long flag names.

use std::collections::BTreeMap;

use anyhow::{bail, Context, Result};

pub const KEYS: &[&str] = &[
    "energy", "matrix", "grid", "levels", "format", "output", "level", "from", "to", "method", "samples",
    "seed", "angles", "gamma-grid", "nu-grid", "only", "w0-file", "threads", "json", "timing",
];

#[derive(Debug, Default, Clone)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(src: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in src.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                bail!("config line {}: expected key = value", i + 1);
            };
            let key = k.trim();
            if !KEYS.contains(&key) {
                bail!("config line {}: unknown key '{key}'", i + 1);
            }
            values.insert(key.to_string(), v.trim().to_string());
        }
        Ok(Config { values })
    }

    pub fn load(path: &str) -> Result<Self> {
        let src = std::fs::read_to_string(path).with_context(|| format!("reading config {path}"))?;
        Self::parse(&src)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Flag value if given, else the config value.
    pub fn pick(&self, flag: Option<String>, key: &str) -> Option<String> {
        flag.or_else(|| self.get(key).map(str::to_string))
    }

    pub fn flag(&self, flag: bool, key: &str) -> Result<bool> {
        if flag {
            return Ok(true);
        }
        match self.get(key) {
            None => Ok(false),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(v) => bail!("config key {key}: expected true or false, got '{v}'"),
        }
    }
}

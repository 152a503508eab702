//! `key = value` configuration files.
//!
//! ```text
//! # six UEs, half of each packet computed at the edge
//! n_ues    = 6
//! lambda   = 0.1
//! mu_b     = 1.5
//! mu_d     = 1.8
//! mu_local = 0.25
//! scheme   = partial
//! p        = 0.5
//! ```
//!
//! `lambda` and `mu_local` take either one value for every UE or a
//! comma-separated list with one value per UE.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use aoi_mec::{Scheme, SystemConfig};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, &self.field) {
            (Some(l), Some(k)) => write!(f, "line {l}, field `{k}`: {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            (None, Some(k)) => write!(f, "field `{k}`: {}", self.message),
            (None, None) => f.write_str(&self.message),
        }
    }
}

impl ConfigError {
    pub fn new(message: impl Into<String>) -> Self {
        Self {
            line: None,
            field: None,
            message: message.into(),
        }
    }

    pub fn at(line: usize, field: &str, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            field: Some(field.to_string()),
            message: message.into(),
        }
    }

    pub fn field(field: &str, message: impl Into<String>) -> Self {
        Self {
            line: None,
            field: Some(field.to_string()),
            message: message.into(),
        }
    }
}

/// One `key = value` entry with its source line.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub value: String,
}

/// Parsed key-value pairs, before interpretation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, Entry>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError {
                    line: Some(line),
                    field: None,
                    message: format!("expected `key = value`, found `{content}`"),
                });
            };
            let key = key.trim().to_ascii_lowercase();
            if key.is_empty() {
                return Err(ConfigError {
                    line: Some(line),
                    field: None,
                    message: "missing key before `=`".into(),
                });
            }
            let entry = Entry {
                line,
                value: value.trim().to_string(),
            };
            if let Some(prev) = entries.insert(key.clone(), entry) {
                return Err(ConfigError::at(line, &key, format!("duplicate key, first set on line {}", prev.line)));
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = (&String, &Entry)> {
        self.entries.iter()
    }

    pub fn require(&self, key: &str) -> Result<&Entry, ConfigError> {
        self.get(key).ok_or_else(|| ConfigError::field(key, "missing required key"))
    }

    /// Parse a scalar value, if present.
    pub fn scalar<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        self.get(key).map(|e| parse_scalar(key, e)).transpose()
    }

    /// Parse a comma-separated list, if present.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, ConfigError> {
        self.get(key).map(|e| parse_list(key, e)).transpose()
    }

    /// Insert `key = value` unless the key is already set.
    pub fn set_default(&mut self, key: &str, value: &str) {
        self.entries.entry(key.to_string()).or_insert_with(|| Entry {
            line: 0,
            value: value.to_string(),
        });
    }

    /// Reject any key outside `allowed`.
    pub fn only(&self, allowed: &[&str]) -> Result<(), ConfigError> {
        for (k, e) in self.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(ConfigError::at(e.line, k, format!("unknown key (expected one of {})", allowed.join(", "))));
            }
        }
        Ok(())
    }
}

pub fn parse_scalar<T: FromStr>(key: &str, e: &Entry) -> Result<T, ConfigError> {
    e.value
        .parse()
        .map_err(|_| ConfigError::at(e.line, key, format!("cannot parse `{}`", e.value)))
}

pub fn parse_list<T: FromStr>(key: &str, e: &Entry) -> Result<Vec<T>, ConfigError> {
    let items: Vec<&str> = e.value.split(',').map(str::trim).collect();
    if items.iter().any(|s| s.is_empty()) {
        return Err(ConfigError::at(e.line, key, "empty list item"));
    }
    items
        .into_iter()
        .map(|s| s.parse().map_err(|_| ConfigError::at(e.line, key, format!("cannot parse `{s}`"))))
        .collect()
}

/// Keys understood by [`system_config`].
pub const CONFIG_KEYS: [&str; 7] = ["n_ues", "lambda", "mu_b", "mu_d", "mu_local", "scheme", "p"];

fn per_ue(kv: &KeyValues, key: &str, n: Option<usize>) -> Result<Vec<f64>, ConfigError> {
    let e = kv.require(key)?;
    let values: Vec<f64> = parse_list(key, e)?;
    match (values.len(), n) {
        (1, Some(n)) => Ok(vec![values[0]; n]),
        (1, None) => Err(ConfigError::at(e.line, key, "scalar value needs `n_ues`")),
        (len, Some(n)) if len != n => {
            Err(ConfigError::at(e.line, key, format!("{len} values for {n} UEs")))
        }
        _ => Ok(values),
    }
}

fn scheme(kv: &KeyValues) -> Result<Scheme, ConfigError> {
    let e = kv.require("scheme")?;
    let p: Option<f64> = kv.scalar("p")?;
    match e.value.to_ascii_lowercase().as_str() {
        "local" => Ok(Scheme::Local),
        "edge" => Ok(Scheme::Edge),
        "partial" => {
            let p = p.ok_or_else(|| ConfigError::field("p", "required for the partial scheme"))?;
            Ok(Scheme::Partial(p))
        }
        other => Err(ConfigError::at(e.line, "scheme", format!("unknown scheme `{other}` (local, edge, partial)"))),
    }
}

/// Interpret parsed keys as a system configuration. Keys outside
/// [`CONFIG_KEYS`] are the caller's business.
pub fn system_config(kv: &KeyValues) -> Result<SystemConfig, ConfigError> {
    let n: Option<usize> = kv.scalar("n_ues")?;
    if n == Some(0) {
        return Err(ConfigError::field("n_ues", "must be at least 1"));
    }
    let lambdas = per_ue(kv, "lambda", n)?;
    let locals = per_ue(kv, "mu_local", n.or(Some(lambdas.len())))?;
    let mu_b: f64 = kv.scalar("mu_b")?.ok_or_else(|| ConfigError::field("mu_b", "missing required key"))?;
    let mu_d: f64 = kv.scalar("mu_d")?.ok_or_else(|| ConfigError::field("mu_d", "missing required key"))?;
    SystemConfig::new(lambdas, mu_b, mu_d, locals, scheme(kv)?).map_err(|e| ConfigError::new(e.to_string()))
}

/// Parse a complete configuration file.
pub fn parse_config(text: &str) -> Result<SystemConfig, ConfigError> {
    let kv = KeyValues::parse(text)?;
    kv.only(&CONFIG_KEYS)?;
    system_config(&kv)
}

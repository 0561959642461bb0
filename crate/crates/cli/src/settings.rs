//! Flat `key = value` configuration: built-in defaults, then an optional
//! file, then command-line flags. The resolved table is what gets echoed
//! into every output.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// A bad flag, config key or value. Maps to exit status 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// One documented setting: key, default value and help text.
pub type Setting = (&'static str, &'static str, &'static str);

/// Keys shared by every command.
pub const COMMON: &[Setting] = &[
    ("seed", "20240617", "master seed for all random streams"),
    ("out", "satake-out", "output directory"),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_flat(text: &str) -> Result<BTreeMap<String, String>, UsageError> {
    let mut out = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| UsageError(format!("config line {}: expected key = value", k + 1)))?;
        out.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(out)
}

impl Settings {
    /// Layers `defaults`, the file at `file` and the `overrides` that were
    /// given. Keys outside `defaults` are rejected.
    pub fn resolve(
        defaults: &[&[Setting]],
        file: Option<&Path>,
        overrides: &[(&str, Option<String>)],
    ) -> Result<Self, UsageError> {
        let mut values: BTreeMap<String, String> = defaults
            .iter()
            .flat_map(|d| d.iter())
            .map(|(k, v, _)| (k.to_string(), v.to_string()))
            .collect();
        let mut layer = |key: &str, value: String, origin: &str| {
            if !values.contains_key(key) {
                return Err(UsageError(format!("unknown setting {key:?} in {origin}")));
            }
            values.insert(key.to_string(), value);
            Ok(())
        };
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
            for (k, v) in parse_flat(&text)? {
                layer(&k, v, "config file")?;
            }
        }
        for (k, v) in overrides {
            if let Some(v) = v {
                layer(k, v.clone(), "flags")?;
            }
        }
        Ok(Settings { values })
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values
            .get(key)
            .map(String::as_str)
            .unwrap_or_else(|| panic!("setting {key} has no default"))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, UsageError>
    where
        T::Err: fmt::Display,
    {
        let raw = self.raw(key);
        raw.parse()
            .map_err(|e| UsageError(format!("invalid value {raw:?} for {key}: {e}")))
    }

    /// A comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, UsageError>
    where
        T::Err: fmt::Display,
    {
        let raw = self.raw(key);
        if raw.trim().is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|s| {
                let s = s.trim();
                s.parse()
                    .map_err(|e| UsageError(format!("invalid entry {s:?} in {key}: {e}")))
            })
            .collect()
    }

    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    /// The resolved table in the same flat format the parser reads.
    pub fn to_flat(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

//! Run configuration: `key = value` lines, `#` comments. Values from a file
//! are defaults that command-line flags override.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

pub const CONFIG_KEYS: &[&str] = &[
    "kernel", "method", "seed", "reps", "level", "format", "out", "tests", "model", "p", "n1",
    "n2", "delta", "direction", "grid", "permutations", "timestamp", "log2", "header",
    "label_col", "labels",
];

/// Validated key-value settings.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                col: 1,
                msg: "expected key = value".into(),
            })?;
            cfg.set(k.trim(), v.trim()).map_err(|e| Error::Parse {
                line: i + 1,
                col: 1,
                msg: e.to_string(),
            })?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::File {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !CONFIG_KEYS.contains(&key) {
            return Err(Error::InvalidArgument(format!("unknown config key '{key}'")));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Parse `key` as `T`, if present.
    pub fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| Error::InvalidArgument(format!("bad value '{v}' for '{key}'")))
            })
            .transpose()
    }

    /// Comma-separated list under `key`.
    pub fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse::<T>()
                            .map_err(|_| Error::InvalidArgument(format!("bad item '{s}' for '{key}'")))
                    })
                    .collect()
            })
            .transpose()
    }
}

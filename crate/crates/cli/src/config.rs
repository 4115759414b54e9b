//! Flat `key = value` config files with `#` comments.
//!
//! Flags always override config values; the file is optional. Keys use the
//! same names as the long flags with `-` replaced by `_`.

use std::collections::BTreeMap;
use std::path::Path;

const KNOWN_KEYS: [&str; 21] = [
    "sigma1",
    "sigma2",
    "p",
    "e",
    "theta1",
    "dim",
    "re",
    "points",
    "quad_order",
    "fd_step",
    "abs_tol",
    "x_tol",
    "max_iter",
    "format",
    "output",
    "axis",
    "from",
    "to",
    "n",
    "quantities",
    "id",
];

#[derive(Debug, Default)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn parse(text: &str) -> Result<FileConfig, String> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(idx) => &raw[..idx],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected `key = value`", lineno + 1))?;
            let key = key.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(format!("line {}: unknown key {key:?}", lineno + 1));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(FileConfig { values })
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>, String> {
        self.get_str(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| format!("config key {key}: {v:?} is not a number"))
            })
            .transpose()
    }

    pub fn get_u32(&self, key: &str) -> Result<Option<u32>, String> {
        self.get_str(key)
            .map(|v| {
                v.parse::<u32>()
                    .map_err(|_| format!("config key {key}: {v:?} is not an integer"))
            })
            .transpose()
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>, String> {
        self.get_str(key)
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| format!("config key {key}: {v:?} is not an integer"))
            })
            .transpose()
    }
}

//! Flat key-value experiment configuration. Flags take precedence over file
//! values; unknown file keys are rejected.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::str::FromStr;

use sepmin::error::{Error, Result};

#[derive(Debug, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
    consumed: RefCell<HashSet<String>>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Config> {
        let mut values = BTreeMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Input(format!("config {}: {e}", path.display())))?;
            for (lineno, line) in text.lines().enumerate() {
                let body = line.split('#').next().unwrap_or("").trim();
                if body.is_empty() {
                    continue;
                }
                let (key, value) = body.split_once('=').ok_or_else(|| {
                    Error::Input(format!("config line {}: expected key = value", lineno + 1))
                })?;
                values.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(Config { values, consumed: RefCell::new(HashSet::new()) })
    }

    /// Typed lookup; marks the key consumed.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.consumed.borrow_mut().insert(key.to_string());
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::Input(format!("config key {key}: bad value {raw:?}"))),
        }
    }

    /// Every recognized key must have been consumed by now.
    pub fn reject_unknown(&self) -> Result<()> {
        let consumed = self.consumed.borrow();
        let unknown: Vec<&String> =
            self.values.keys().filter(|k| !consumed.contains(*k)).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::Input(format!(
                "unknown config keys: {}",
                unknown.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn parses_and_rejects_unknown() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# comment\neps = 2.0\nd = 3\nbogus = 1").unwrap();
        let cfg = Config::load(Some(f.path())).unwrap();
        assert_eq!(cfg.get::<f64>("eps").unwrap(), Some(2.0));
        assert_eq!(cfg.get::<usize>("d").unwrap(), Some(3));
        assert!(cfg.reject_unknown().is_err());
        let _ = cfg.get::<u64>("bogus");
        assert!(cfg.reject_unknown().is_ok());
    }

    #[test]
    fn bad_value_is_input_error() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "eps = banana").unwrap();
        let cfg = Config::load(Some(f.path())).unwrap();
        assert!(cfg.get::<f64>("eps").is_err());
    }
}

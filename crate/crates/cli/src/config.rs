//! Flat `key = value` config file. Command-line flags take precedence.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

pub const KEYS: &[&str] = &[
    "corpus",
    "lexica",
    "scorer",
    "scalar_mode",
    "smoothing",
    "positive_min_rating",
    "negative_max_rating",
    "cutoff",
    "max_len",
    "dimension",
    "window",
    "min_count",
    "epochs",
    "learning_rate",
    "seed",
    "port",
    "static_dir",
];

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    /// Blank lines and `#` comments are skipped; unknown keys are rejected.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| format!("line {}: expected key = value", i + 1))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(format!("line {}: unknown key {key:?}", i + 1));
            }
            if values.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(format!("line {}: duplicate key {key:?}", i + 1));
            }
        }
        Ok(Self { values })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        self.values
            .get(key)
            .map(|v| v.parse().map_err(|e| CliError::Validation(format!("config {key} = {v:?}: {e}"))))
            .transpose()
    }

    /// The flag value if given, else the config value, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }

    pub fn pick_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_overrides() {
        let c = ConfigFile::parse("# run 3\nseed = 7\ncutoff=0.6\n\n").unwrap();
        assert_eq!(c.pick(None, "seed", 1u64).unwrap(), 7);
        assert_eq!(c.pick(Some(9u64), "seed", 1).unwrap(), 9);
        assert_eq!(c.pick(None, "epochs", 5usize).unwrap(), 5);
        assert_eq!(c.get::<f64>("cutoff").unwrap(), Some(0.6));
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(ConfigFile::parse("seed 7").is_err());
        assert!(ConfigFile::parse("colour = red").is_err());
        assert!(ConfigFile::parse("seed = 1\nseed = 2").is_err());
        let c = ConfigFile::parse("seed = many").unwrap();
        assert!(c.get::<u64>("seed").is_err());
    }
}

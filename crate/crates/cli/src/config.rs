//! Flat key=value config files; individual command-line flags override.

use anyhow::{bail, Context, Result};
use std::collections::HashMap;
use std::path::Path;

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    entries: HashMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let mut entries = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!(
                    "{}:{}: expected key=value, got `{raw}`",
                    path.display(),
                    lineno + 1
                );
            };
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(ConfigFile { entries })
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some(raw) => match raw.parse::<T>() {
                Ok(v) => Ok(Some(v)),
                Err(e) => bail!("config key `{key}`: cannot parse `{raw}`: {e}"),
            },
        }
    }
}

/// flag value, else config value, else default.
pub fn resolve<T: std::str::FromStr + Copy>(
    flag: Option<T>,
    config: &ConfigFile,
    key: &str,
    default: T,
) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    Ok(flag.or(config.get(key)?).unwrap_or(default))
}

/// flag value, else config value, else error naming the flag.
pub fn require<T: std::str::FromStr + Copy>(
    flag: Option<T>,
    config: &ConfigFile,
    key: &str,
) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    match flag.or(config.get(key)?) {
        Some(v) => Ok(v),
        None => bail!("missing required value for --{key}"),
    }
}

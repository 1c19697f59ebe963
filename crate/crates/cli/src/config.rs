//! Plain-text run configuration: one `key = value` per line, `#` comments.
//! Keys mirror the long flag names; explicit flags override file values.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default)]
pub struct ConfigMap {
    values: HashMap<String, String>,
}

impl ConfigMap {
    pub fn load(path: &Path) -> CliResult<Self> {
        let content = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
        let mut values = HashMap::new();
        for (i, line) in content.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::usage(format!(
                    "{}: line {}: expected `key = value`",
                    path.display(),
                    i + 1
                ))
            })?;
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(ConfigMap { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get_parsed<T: std::str::FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                CliError::usage(format!("config key `{key}` has unparseable value `{raw}`"))
            }),
        }
    }

    pub fn get_bool(&self, key: &str) -> CliResult<Option<bool>> {
        match self.values.get(key).map(String::as_str) {
            None => Ok(None),
            Some("true") | Some("1") | Some("yes") => Ok(Some(true)),
            Some("false") | Some("0") | Some("no") => Ok(Some(false)),
            Some(other) => {
                Err(CliError::usage(format!("config key `{key}` has non-boolean value `{other}`")))
            }
        }
    }
}

/// Flag value if given, else config value, else the default.
pub fn resolve<T: std::str::FromStr + Clone>(
    flag: Option<T>,
    config: &ConfigMap,
    key: &str,
    default: T,
) -> CliResult<T> {
    if let Some(v) = flag {
        return Ok(v);
    }
    Ok(config.get_parsed::<T>(key)?.unwrap_or(default))
}

/// Same as [`resolve`] but without a default.
pub fn resolve_opt<T: std::str::FromStr>(
    flag: Option<T>,
    config: &ConfigMap,
    key: &str,
) -> CliResult<Option<T>> {
    if let Some(v) = flag {
        return Ok(Some(v));
    }
    config.get_parsed::<T>(key)
}

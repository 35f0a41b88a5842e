//! Layering of TOML config files over values built from flags and defaults.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Returns `base` with every key present in `text` replaced by the file's
/// value. Tables merge key by key; unknown keys are rejected by the target
/// type where it denies them.
pub fn overlay<T: Serialize + DeserializeOwned>(base: &T, text: &str) -> Result<T> {
    let file: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let mut merged = toml::Table::try_from(base).map_err(|e| Error::Config(e.to_string()))?;
    merge(&mut merged, file);
    merged.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))
}

pub fn overlay_file<T: Serialize + DeserializeOwned>(base: &T, path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    overlay(base, &text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// TOML text of a value, each line prefixed with `# `.
pub fn commented<T: Serialize>(value: &T) -> Result<String> {
    let text = toml::to_string(value).map_err(|e| Error::Config(e.to_string()))?;
    Ok(text
        .lines()
        .filter(|l| !l.is_empty())
        .map(|l| format!("# {l}\n"))
        .collect())
}

fn merge(into: &mut toml::Table, from: toml::Table) {
    for (k, v) in from {
        match (into.get_mut(&k), v) {
            (Some(toml::Value::Table(a)), toml::Value::Table(b)) => merge(a, b),
            (_, v) => {
                into.insert(k, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use trmv_core::TrmvConfig;

    #[test]
    fn file_wins_over_base() {
        let base = TrmvConfig {
            lambda: 3.0,
            seed: 9,
            ..TrmvConfig::default()
        };
        let cfg = overlay(&base, "lambda = 0.5\nmax_iter = 7\n").unwrap();
        assert_eq!((cfg.lambda, cfg.max_iter, cfg.seed), (0.5, 7, 9));
        assert!(overlay(&base, "lambda = \"x\"").is_err());
        assert!(commented(&base).unwrap().starts_with("# lambda = 3.0\n"));
    }
}

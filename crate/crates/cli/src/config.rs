//! `key = value` run configuration and the provenance header stamped on
//! every artifact.
//!
//! Precedence is command-line flag, then config file, then built-in default.
//! Every value actually used is recorded, so the provenance `config` map is
//! itself a valid config file once written back as `key = value` lines.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::{json, Value};

use crate::CliError;

/// Every key a config file may contain.
pub const KNOWN_KEYS: [&str; 26] = [
    "data",
    "dropout",
    "edges",
    "epochs",
    "features",
    "folds",
    "fs",
    "graph_k",
    "group_by_subject",
    "hand",
    "hidden",
    "inductive",
    "input",
    "linear_only",
    "lr",
    "max_hz",
    "n_healthy",
    "n_pd",
    "out",
    "overlap",
    "pipeline",
    "seed",
    "segment",
    "subject",
    "svm_c",
    "window_s",
];

/// Output locations. They do not affect artifact content, so they are left
/// out of provenance; otherwise the same run written to two places would
/// differ byte for byte.
const OUTPUT_KEYS: [&str; 2] = ["edges", "out"];

#[derive(Debug, Default)]
pub struct Settings {
    file: BTreeMap<String, String>,
    resolved: BTreeMap<String, String>,
}

/// Parses `key = value` lines. Blank lines and `#` comments are ignored;
/// unknown or repeated keys are usage errors.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected `key = value`", i + 1)))?;
        let key = key.trim();
        if !KNOWN_KEYS.contains(&key) {
            return Err(CliError::Usage(format!("config line {}: unknown key `{key}`", i + 1)));
        }
        if out.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(CliError::Usage(format!("config line {}: duplicate key `{key}`", i + 1)));
        }
    }
    Ok(out)
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let file = match path {
            None => BTreeMap::new(),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
                parse_config(&text)?
            }
        };
        Ok(Self {
            file,
            resolved: BTreeMap::new(),
        })
    }

    fn lookup<T>(&mut self, key: &'static str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let value = match (flag, self.file.get(key)) {
            (Some(v), _) => v,
            (None, Some(raw)) => raw
                .parse()
                .map_err(|e| CliError::Usage(format!("config key `{key}`: {e}")))?,
            (None, None) => return Ok(None),
        };
        self.resolved.insert(key.to_string(), value.to_string());
        Ok(Some(value))
    }

    pub fn value<T>(&mut self, key: &'static str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        match self.lookup(key, flag)? {
            Some(v) => Ok(v),
            None => {
                self.resolved.insert(key.to_string(), default.to_string());
                Ok(default)
            }
        }
    }

    pub fn optional<T>(&mut self, key: &'static str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        self.lookup(key, flag)
    }

    /// Boolean switches can only be turned on from the command line.
    pub fn switch(&mut self, key: &'static str, flag: bool) -> Result<bool, CliError> {
        self.value(key, flag.then_some(true), false)
    }

    pub fn optional_path(&mut self, key: &'static str, flag: Option<PathBuf>) -> Result<Option<PathBuf>, CliError> {
        let flag = flag.map(|p| p.to_string_lossy().into_owned());
        Ok(self.lookup::<String>(key, flag)?.map(PathBuf::from))
    }

    pub fn path(&mut self, key: &'static str, flag: Option<PathBuf>) -> Result<PathBuf, CliError> {
        self.optional_path(key, flag)?.ok_or_else(|| {
            CliError::Usage(format!(
                "missing `--{}` (or `{key}` in the config file)",
                key.replace('_', "-")
            ))
        })
    }

    pub fn provenance(&self, command: &str) -> Value {
        let seed = self.resolved.get("seed").and_then(|s| s.parse::<u64>().ok());
        let config: BTreeMap<&String, &String> = self
            .resolved
            .iter()
            .filter(|(k, _)| !OUTPUT_KEYS.contains(&k.as_str()))
            .collect();
        json!({
            "tool": "semgcn",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "seed": seed,
            "config": config,
        })
    }
}

/// Single-line form used in `#` comment headers of text artifacts.
pub fn header_line(provenance: &Value) -> String {
    format!("provenance {provenance}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_beats_file_beats_default() {
        let mut s = Settings {
            file: parse_config("seed = 4\n# comment\nfolds=3\n").unwrap(),
            ..Default::default()
        };
        assert_eq!(s.value("seed", Some(9u64), 0).unwrap(), 9);
        assert_eq!(s.value("folds", None, 5usize).unwrap(), 3);
        assert_eq!(s.value("graph_k", None, 10usize).unwrap(), 10);
        assert_eq!(s.resolved["seed"], "9");
        assert_eq!(s.resolved["graph_k"], "10");
    }

    #[test]
    fn bad_lines_are_usage_errors() {
        for text in ["seed 4", "colour = red", "seed = 1\nseed = 2"] {
            assert!(matches!(parse_config(text), Err(CliError::Usage(_))), "{text}");
        }
        let mut s = Settings {
            file: parse_config("folds = many").unwrap(),
            ..Default::default()
        };
        assert!(matches!(s.value("folds", None, 5usize), Err(CliError::Usage(_))));
    }

    #[test]
    fn resolved_config_round_trips_as_a_file() {
        let mut s = Settings::default();
        s.value("lr", None, 0.01f64).unwrap();
        s.value("pipeline", None, "gcn-svm".to_string()).unwrap();
        let text: String = s.resolved.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
        assert_eq!(parse_config(&text).unwrap(), s.resolved);
    }
}

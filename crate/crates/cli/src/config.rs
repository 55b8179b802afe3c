//! Run configuration: a JSON document that names a preset and overrides any of its keys.

use std::path::{Path, PathBuf};

use serde_json::{Map, Value};
use sps_core::presets::builtin_json;

/// Environment variable that overrides the configured worker count.
pub const WORKERS_ENV: &str = "SPS_WORKERS";

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// A parsed run configuration. `body` holds the preset document with every
/// override applied; it is deserialized by the subcommand.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub body: Value,
}

/// Recursively overlays `patch` on `base`; objects merge, everything else replaces.
pub fn deep_merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => deep_merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| err(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let value: Value = serde_json::from_str(text).map_err(|e| err(format!("config is not valid JSON: {e}")))?;
        let Value::Object(mut map) = value else {
            return Err(err("config must be a JSON object"));
        };
        let preset = match map.remove("preset") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(s),
            Some(other) => return Err(err(format!("`preset` must be a string, got {other}"))),
        };
        let workers = match map.remove("workers") {
            None | Some(Value::Null) => None,
            Some(v) => Some(parse_workers(&v.to_string(), "`workers`")?),
        };
        let out = match map.remove("out") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(PathBuf::from(s)),
            Some(other) => return Err(err(format!("`out` must be a string, got {other}"))),
        };
        Ok(RunConfig {
            preset,
            workers,
            out,
            body: Value::Object(map),
        })
    }

    /// The preset document with overrides applied. Without a preset the
    /// overrides must spell out the whole document.
    pub fn resolved(&self, default_preset: Option<&str>) -> Result<Value, ConfigError> {
        let name = self.preset.as_deref().or(default_preset);
        let mut base = match name {
            Some(n) => {
                let text = builtin_json(n).ok_or_else(|| err(format!("unknown preset `{n}`")))?;
                serde_json::from_str(text).expect("bundled presets are valid JSON")
            }
            None => Value::Object(Map::new()),
        };
        deep_merge(&mut base, self.body.clone());
        Ok(base)
    }

    /// Worker count: the environment variable wins over the config key.
    pub fn worker_count(&self) -> Result<Option<usize>, ConfigError> {
        match std::env::var(WORKERS_ENV) {
            Ok(s) if !s.trim().is_empty() => Ok(Some(parse_workers(s.trim(), WORKERS_ENV)?)),
            _ => Ok(self.workers),
        }
    }
}

fn parse_workers(s: &str, what: &str) -> Result<usize, ConfigError> {
    match s.parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(err(format!("{what} must be a positive integer, got {s}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn merge_is_recursive() {
        let mut a = json!({"params": {"kappa": 1.0, "g": 2.0}, "name": "x"});
        deep_merge(&mut a, json!({"params": {"kappa": 5.0}, "sweep": [1]}));
        assert_eq!(a, json!({"params": {"kappa": 5.0, "g": 2.0}, "name": "x", "sweep": [1]}));
    }

    #[test]
    fn run_keys_are_split_off() {
        let c = RunConfig::parse(r#"{"preset": "fig9", "workers": 3, "out": "o", "name": "n"}"#).unwrap();
        assert_eq!(c.preset.as_deref(), Some("fig9"));
        assert_eq!(c.workers, Some(3));
        assert_eq!(c.out, Some(PathBuf::from("o")));
        assert_eq!(c.body, json!({"name": "n"}));
    }

    #[test]
    fn bad_run_keys_are_rejected() {
        assert!(RunConfig::parse(r#"{"workers": 0}"#).is_err());
        assert!(RunConfig::parse(r#"{"workers": "two"}"#).is_err());
        assert!(RunConfig::parse(r#"{"preset": 4}"#).is_err());
        assert!(RunConfig::parse("[1]").is_err());
        assert!(RunConfig::parse(r#"{"preset": "nope"}"#).unwrap().resolved(None).is_err());
    }
}

//! Flat JSON run configuration merged with command-line flags.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use super::CliError;

/// Resolves parameters from flags first, then the config file, then defaults,
/// recording every resolved value.
pub(crate) struct Resolver {
    file: Map<String, Value>,
    resolved: Map<String, Value>,
}

impl Resolver {
    pub(crate) fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let file = match path {
            None => Map::new(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("cannot read config {}: {e}", p.display())))?;
                match serde_json::from_str::<Value>(&text) {
                    Ok(Value::Object(map)) => map,
                    Ok(_) => return Err(CliError::Config("config must be a flat JSON object".into())),
                    Err(e) => return Err(CliError::Config(format!("malformed config {}: {e}", p.display()))),
                }
            }
        };
        Ok(Resolver { file, resolved: Map::new() })
    }

    fn record<T: Serialize>(&mut self, key: &str, value: &T) -> Result<(), CliError> {
        let v = serde_json::to_value(value).map_err(|e| CliError::Config(format!("{key}: {e}")))?;
        self.resolved.insert(key.to_string(), v);
        Ok(())
    }

    pub(crate) fn opt<T: DeserializeOwned + Serialize>(&mut self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError> {
        let from_file = self.file.remove(key);
        let value = match (flag, from_file) {
            (Some(v), _) => Some(v),
            (None, Some(Value::Null)) | (None, None) => None,
            (None, Some(v)) => Some(serde_json::from_value(v).map_err(|e| CliError::Config(format!("config key '{key}': {e}")))?),
        };
        if let Some(v) = &value {
            self.record(key, v)?;
        }
        Ok(value)
    }

    pub(crate) fn get<T: DeserializeOwned + Serialize>(&mut self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError> {
        let value = self.opt(flag, key)?.unwrap_or(default);
        self.record(key, &value)?;
        Ok(value)
    }

    pub(crate) fn require<T: DeserializeOwned + Serialize>(&mut self, flag: Option<T>, key: &str) -> Result<T, CliError> {
        self.opt(flag, key)?.ok_or_else(|| CliError::Config(format!("missing required parameter '{key}'")))
    }

    /// Rejects config keys that no parameter consumed and returns the
    /// resolved parameter set.
    pub(crate) fn finish(self) -> Result<Map<String, Value>, CliError> {
        if let Some(key) = self.file.keys().next() {
            return Err(CliError::Config(format!("unknown config key '{key}'")));
        }
        Ok(self.resolved)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"d": 2, "N": [4, 8], "eps": 0.1}"#).unwrap();
        let mut r = Resolver::load(Some(&path)).unwrap();
        assert_eq!(r.get(Some(3usize), "d", 1).unwrap(), 3);
        assert_eq!(r.get::<Vec<usize>>(None, "N", vec![]).unwrap(), vec![4, 8]);
        assert_eq!(r.get(None, "s", 2usize).unwrap(), 2);
        assert!(r.finish().is_err());
    }

    #[test]
    fn malformed_and_mistyped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, "{not json").unwrap();
        assert!(matches!(Resolver::load(Some(&path)), Err(CliError::Config(_))));
        std::fs::write(&path, r#"{"d": "two"}"#).unwrap();
        let mut r = Resolver::load(Some(&path)).unwrap();
        assert!(matches!(r.get(None, "d", 1usize), Err(CliError::Config(_))));
    }
}

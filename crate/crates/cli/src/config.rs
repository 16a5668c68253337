//! Configuration plumbing: one JSON document, overridden by `--set
//! key=value` flags whose names mirror the JSON fields exactly. Every
//! defaulted field is recorded so manifests can list it.

use std::collections::BTreeSet;
use std::path::Path;

use serde_json::{Map, Value};

use crate::CliError;

pub struct RawConfig {
    map: Map<String, Value>,
    consumed: BTreeSet<String>,
    defaulted: BTreeSet<String>,
    resolved: Map<String, Value>,
}

impl RawConfig {
    pub fn load(path: Option<&Path>, sets: &[String]) -> Result<Self, CliError> {
        let mut map = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Usage(format!("cannot read config {p:?}: {e}")))?;
                match serde_json::from_str::<Value>(&text) {
                    Ok(Value::Object(m)) => m,
                    Ok(_) => {
                        return Err(CliError::Usage(format!(
                            "config {p:?} must be a JSON object"
                        )))
                    }
                    Err(e) => {
                        return Err(CliError::Usage(format!("config {p:?} is not JSON: {e}")))
                    }
                }
            }
            None => Map::new(),
        };
        for kv in sets {
            let Some((key, raw)) = kv.split_once('=') else {
                return Err(CliError::Usage(format!("--set expects key=value, got {kv:?}")));
            };
            // values parse as JSON when possible, otherwise as strings
            let value = serde_json::from_str::<Value>(raw)
                .unwrap_or_else(|_| Value::String(raw.to_string()));
            map.insert(key.trim().to_string(), value);
        }
        Ok(RawConfig {
            map,
            consumed: BTreeSet::new(),
            defaulted: BTreeSet::new(),
            resolved: Map::new(),
        })
    }

    fn take(&mut self, key: &str) -> Option<Value> {
        self.consumed.insert(key.to_string());
        self.map.get(key).cloned()
    }

    fn record(&mut self, key: &str, value: Value, was_default: bool) {
        if was_default {
            self.defaulted.insert(key.to_string());
        }
        self.resolved.insert(key.to_string(), value);
    }

    pub fn f64(&mut self, key: &str, default: f64) -> Result<f64, CliError> {
        let (v, was_default) = match self.take(key) {
            Some(Value::Number(n)) => (
                n.as_f64().ok_or_else(|| {
                    CliError::Usage(format!("field {key:?} is not a finite number"))
                })?,
                false,
            ),
            Some(other) => {
                return Err(CliError::Usage(format!("field {key:?} must be a number, got {other}")))
            }
            None => (default, true),
        };
        self.record(key, serde_json::json!(v), was_default);
        Ok(v)
    }

    pub fn u64(&mut self, key: &str, default: u64) -> Result<u64, CliError> {
        let (v, was_default) = match self.take(key) {
            Some(Value::Number(n)) => (
                n.as_u64().ok_or_else(|| {
                    CliError::Usage(format!("field {key:?} must be a nonnegative integer"))
                })?,
                false,
            ),
            Some(other) => {
                return Err(CliError::Usage(format!(
                    "field {key:?} must be an integer, got {other}"
                )))
            }
            None => (default, true),
        };
        self.record(key, serde_json::json!(v), was_default);
        Ok(v)
    }

    pub fn u32(&mut self, key: &str, default: u32) -> Result<u32, CliError> {
        let v = self.u64(key, default as u64)?;
        u32::try_from(v)
            .map_err(|_| CliError::Usage(format!("field {key:?} = {v} exceeds u32 range")))
    }

    pub fn string(&mut self, key: &str, default: &str) -> Result<String, CliError> {
        let (v, was_default) = match self.take(key) {
            Some(Value::String(s)) => (s, false),
            Some(other) => {
                return Err(CliError::Usage(format!("field {key:?} must be a string, got {other}")))
            }
            None => (default.to_string(), true),
        };
        self.record(key, Value::String(v.clone()), was_default);
        Ok(v)
    }

    pub fn opt_f64(&mut self, key: &str) -> Result<Option<f64>, CliError> {
        let v = match self.take(key) {
            Some(Value::Number(n)) => n.as_f64(),
            Some(Value::Null) | None => None,
            Some(other) => {
                return Err(CliError::Usage(format!(
                    "field {key:?} must be a number or null, got {other}"
                )))
            }
        };
        self.record(key, serde_json::json!(v), v.is_none());
        Ok(v)
    }

    pub fn f64_list(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>, CliError> {
        let (v, was_default) = match self.take(key) {
            Some(Value::Array(items)) => {
                let mut out = Vec::with_capacity(items.len());
                for it in items {
                    match it {
                        Value::Number(n) if n.as_f64().is_some() => out.push(n.as_f64().unwrap()),
                        other => {
                            return Err(CliError::Usage(format!(
                                "field {key:?} must hold numbers, got {other}"
                            )))
                        }
                    }
                }
                (out, false)
            }
            Some(other) => {
                return Err(CliError::Usage(format!("field {key:?} must be an array, got {other}")))
            }
            None => (default.to_vec(), true),
        };
        self.record(key, serde_json::json!(v), was_default);
        Ok(v)
    }

    /// Optional grid; present only when the config sweeps this parameter.
    pub fn opt_f64_list(&mut self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        match self.take(key) {
            Some(Value::Array(items)) => {
                let mut out = Vec::with_capacity(items.len());
                for it in &items {
                    let Some(x) = it.as_f64() else {
                        return Err(CliError::Usage(format!(
                            "field {key:?} must hold numbers, got {it}"
                        )));
                    };
                    out.push(x);
                }
                self.record(key, serde_json::json!(out), false);
                Ok(Some(out))
            }
            Some(Value::Null) | None => Ok(None),
            Some(other) => {
                Err(CliError::Usage(format!("field {key:?} must be an array, got {other}")))
            }
        }
    }

    /// Fail on fields that no experiment consumed — typos are user errors.
    pub fn finish(&self) -> Result<(), CliError> {
        for key in self.map.keys() {
            if !self.consumed.contains(key) {
                return Err(CliError::Usage(format!("unknown config field {key:?}")));
            }
        }
        Ok(())
    }

    pub fn defaulted(&self) -> Vec<String> {
        self.defaulted.iter().cloned().collect()
    }

    pub fn resolved(&self) -> Value {
        Value::Object(self.resolved.clone())
    }

    /// The experiment named in the config, if any (the positional argument
    /// must agree with it).
    pub fn config_experiment(&mut self) -> Result<Option<String>, CliError> {
        match self.take("experiment") {
            Some(Value::String(s)) => {
                self.record("experiment", Value::String(s.clone()), false);
                Ok(Some(s))
            }
            Some(other) => {
                Err(CliError::Usage(format!("field \"experiment\" must be a string, got {other}")))
            }
            None => Ok(None),
        }
    }
}

//! Machine-readable run reports.
//!
//! Reports contain no wall-clock data unless timings are requested, so two
//! runs with the same inputs and seed serialize to identical bytes.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Versions {
    pub package: &'static str,
    pub version: &'static str,
}

impl Default for Versions {
    fn default() -> Self {
        Self {
            package: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: String,
    pub versions: Versions,
    pub inputs: Value,
    pub results: Value,
    pub residuals: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
    /// Seconds per phase; only present when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<BTreeMap<String, f64>>,
}

impl RunReport {
    pub fn new(command: &str, inputs: impl Serialize) -> Result<Self> {
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            versions: Versions::default(),
            inputs: serde_json::to_value(inputs)?,
            results: Value::Null,
            residuals: BTreeMap::new(),
            warnings: Vec::new(),
            timings: None,
        })
    }

    pub fn with_results(mut self, results: impl Serialize) -> Result<Self> {
        self.results = serde_json::to_value(results)?;
        Ok(self)
    }

    pub fn residual(&mut self, name: &str, value: f64) {
        self.residuals.insert(name.to_string(), value);
    }

    pub fn timing(&mut self, name: &str, seconds: f64) {
        self.timings
            .get_or_insert_with(BTreeMap::new)
            .insert(name.to_string(), seconds);
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn timings_absent_by_default() {
        let r = RunReport::new("c", json!({"n": 3})).unwrap();
        let text = r.to_json().unwrap();
        assert!(!text.contains("timings"));
        assert!(text.contains("\"schema_version\": 1"));
    }

    #[test]
    fn key_order_is_stable() {
        let a = RunReport::new("c", json!({"b": 1, "a": 2})).unwrap();
        let b = RunReport::new("c", json!({"a": 2, "b": 1})).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }
}

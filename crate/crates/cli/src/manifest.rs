//! Run manifests and deterministic report files.
//!
//! `manifest.json` carries the config echo (defaults spelled out), crate
//! versions, and every numeric check with its value, tolerance and
//! provenance tag. It contains nothing time-dependent, so reruns under a
//! fixed seed are byte-identical; the wall clock goes to `timing.json`.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::CliError;

/// Where a checked value comes from: a quantity the source analysis pins
/// exactly, a value derived by this tool's own oracles, or a bookkeeping
/// triviality.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Paper,
    Derived,
    Trivial,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(with = "superrep_core::numeric::ext_real")]
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub provenance: Provenance,
}

impl Check {
    pub fn close(
        name: impl Into<String>,
        value: f64,
        expected: f64,
        tolerance: f64,
        provenance: Provenance,
    ) -> Self {
        Check {
            name: name.into(),
            passed: (value - expected).abs() <= tolerance,
            value,
            expected: Some(expected),
            tolerance: Some(tolerance),
            provenance,
        }
    }

    pub fn flag(name: impl Into<String>, passed: bool, value: f64, provenance: Provenance) -> Self {
        Check { name: name.into(), passed, value, expected: None, tolerance: None, provenance }
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub experiment: String,
    pub config: Value,
    pub defaulted: Vec<String>,
    pub versions: BTreeMap<String, String>,
    pub checks: Vec<Check>,
    pub all_passed: bool,
    pub outputs: Vec<String>,
    /// Extra experiment payload (estimates, reports), deterministic.
    #[serde(skip_serializing_if = "Value::is_null")]
    pub payload: Value,
}

impl RunManifest {
    pub fn new(experiment: &str, config: Value, defaulted: Vec<String>) -> Self {
        let mut versions = BTreeMap::new();
        versions.insert("superrep".to_string(), env!("CARGO_PKG_VERSION").to_string());
        RunManifest {
            experiment: experiment.to_string(),
            config,
            defaulted,
            versions,
            checks: Vec::new(),
            all_passed: true,
            outputs: Vec::new(),
            payload: Value::Null,
        }
    }

    pub fn push(&mut self, check: Check) {
        self.all_passed &= check.passed;
        self.checks.push(check);
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }
}

/// Lossless float formatting for CSV: 17 significant digits, '.' decimal.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{x:.16e}")
    }
}

pub struct OutputWriter {
    dir: PathBuf,
    files: Vec<String>,
}

impl OutputWriter {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Run(format!("cannot create output dir {dir:?}: {e}")))?;
        Ok(OutputWriter { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn write_text(&mut self, name: &str, content: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, content)
            .map_err(|e| CliError::Run(format!("cannot write {path:?}: {e}")))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_csv(&mut self, name: &str, header: &str, rows: &[String]) -> Result<(), CliError> {
        let mut text = String::with_capacity(rows.len() * 64 + header.len() + 1);
        text.push_str(header);
        text.push('\n');
        for row in rows {
            text.push_str(row);
            text.push('\n');
        }
        self.write_text(name, &text)
    }

    /// Finalize: manifest.json (deterministic), checks.csv, timing.json.
    pub fn finish(mut self, mut manifest: RunManifest, wall_secs: f64) -> Result<(), CliError> {
        let check_rows: Vec<String> = manifest
            .checks
            .iter()
            .map(|c| {
                format!(
                    "{},{},{},{},{},{}",
                    c.name,
                    c.passed,
                    fmt_f64(c.value),
                    c.expected.map(fmt_f64).unwrap_or_default(),
                    c.tolerance.map(fmt_f64).unwrap_or_default(),
                    serde_json::to_value(c.provenance).unwrap().as_str().unwrap()
                )
            })
            .collect();
        self.write_csv("checks.csv", "name,passed,value,expected,tolerance,provenance", &check_rows)?;

        manifest.outputs = self.files.clone();
        manifest.outputs.push("manifest.json".to_string());
        manifest.outputs.sort();
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::Run(format!("manifest serialization: {e}")))?;
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, text)
            .map_err(|e| CliError::Run(format!("cannot write {path:?}: {e}")))?;

        let timing = self.dir.join("timing.json");
        let mut f = std::fs::File::create(&timing)
            .map_err(|e| CliError::Run(format!("cannot write {timing:?}: {e}")))?;
        writeln!(f, "{{\n  \"wall_clock_secs\": {wall_secs}\n}}")
            .map_err(|e| CliError::Run(format!("cannot write {timing:?}: {e}")))?;
        Ok(())
    }
}

//! Artifact writing: canonical JSON reports and fixed-precision CSV.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::CliError;

/// Environment variable overriding the output directory of the config.
pub const OUTPUT_DIR_ENV: &str = "FSHE_OUTPUT_DIR";

/// JSON with object keys sorted at every level.
pub fn canonical_json<T: Serialize>(v: &T) -> String {
    // serde_json's map is ordered by key unless `preserve_order` is enabled
    let value = serde_json::to_value(v).expect("report serializes");
    serde_json::to_string_pretty(&value).expect("value serializes")
}

/// 17 significant digits, so values round-trip exactly.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "NaN".to_string()
    }
}

/// A JSON object whose entries are emitted in sorted order.
#[derive(Debug, Default)]
pub struct Report(Map<String, Value>);

impl Report {
    /// Starts a report carrying the config hash and the constants assumptions.
    pub fn new(command: &str, config_hash: &str, assumptions: Vec<String>) -> Self {
        let mut r = Self::default();
        r.set("command", command);
        r.set("config_hash", config_hash);
        r.set("assumptions", assumptions);
        r
    }

    pub fn set<T: Serialize>(&mut self, key: &str, v: T) {
        self.0.insert(key.to_string(), serde_json::to_value(v).expect("report field serializes"));
    }

    pub fn to_json(&self) -> String {
        canonical_json(&self.0)
    }
}

/// Resolves and creates the output directory: flag, then environment, then config, then `.`.
pub fn output_dir(flag: Option<&Path>, config: Option<&str>) -> Result<PathBuf, CliError> {
    let dir = match (flag, std::env::var_os(OUTPUT_DIR_ENV)) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(env)) if !env.is_empty() => PathBuf::from(env),
        _ => PathBuf::from(config.unwrap_or(".")),
    };
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

pub fn write_report(dir: &Path, name: &str, report: &Report) -> Result<String, CliError> {
    let json = report.to_json();
    fs::write(dir.join(name), format!("{json}\n"))?;
    Ok(json)
}

/// Writes a CSV with a header row and numeric rows.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Short decimal tag for file names, e.g. `1.5` or `2`.
pub fn p_tag(p: f64) -> String {
    format!("{p}")
}

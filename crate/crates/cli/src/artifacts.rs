//! CSV and JSON artifacts. Every file carries the schema version and the
//! SHA-256 of the canonical config text.

use crate::CliError;
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Csv {
    text: String,
    width: usize,
}

impl Csv {
    pub fn new(config_hash: &str, columns: &[&str]) -> Self {
        let mut text = String::new();
        let _ = writeln!(text, "# schema_version={SCHEMA_VERSION}");
        let _ = writeln!(text, "# config_sha256={config_hash}");
        text.push_str(&columns.join(","));
        text.push('\n');
        Csv {
            text,
            width: columns.len(),
        }
    }

    pub fn row(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.width);
        let mut first = true;
        for v in values {
            if !first {
                self.text.push(',');
            }
            first = false;
            self.text.push_str(&fmt_f64(*v));
        }
        self.text.push('\n');
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        write_file(path, &self.text)
    }
}

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Adds the schema and hash fields to a JSON object and writes it.
pub fn write_json(path: &Path, config_hash: &str, mut body: Value) -> Result<(), CliError> {
    if let Value::Object(map) = &mut body {
        map.insert("schema_version".into(), json!(SCHEMA_VERSION));
        map.insert("config_sha256".into(), json!(config_hash));
    }
    let text = serde_json::to_string_pretty(&body).map_err(|e| CliError::Io(e.to_string()))?;
    write_file(path, &(text + "\n"))
}

/// A parsed artifact CSV.
#[derive(Clone, Debug)]
pub struct Table {
    pub path: PathBuf,
    pub schema_version: Option<u32>,
    pub config_hash: Option<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        let mut schema_version = None;
        let mut config_hash = None;
        let mut columns = Vec::new();
        let mut rows = Vec::new();
        for line in text.lines() {
            if let Some(meta) = line.strip_prefix('#') {
                if let Some((k, v)) = meta.trim().split_once('=') {
                    match k {
                        "schema_version" => schema_version = v.parse().ok(),
                        "config_sha256" => config_hash = Some(v.to_string()),
                        _ => {}
                    }
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            if columns.is_empty() {
                columns = line.split(',').map(|s| s.trim().to_string()).collect();
                continue;
            }
            let row = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::Io(format!("{}: bad number ({e})", path.display())))?;
            if row.len() != columns.len() {
                return Err(CliError::Io(format!("{}: ragged row", path.display())));
            }
            rows.push(row);
        }
        Ok(Table {
            path: path.to_path_buf(),
            schema_version,
            config_hash,
            columns,
            rows,
        })
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>, CliError> {
        let j =
            self.columns.iter().position(|c| c == name).ok_or_else(|| {
                CliError::Io(format!("{}: no column {name:?}", self.path.display()))
            })?;
        Ok(self.rows.iter().map(|r| r[j]).collect())
    }
}

/// Long (t, r, value) table → times, radii and a t-major matrix.
pub fn unflatten(
    t: &[f64],
    r: &[f64],
    v: &[f64],
) -> Result<(Vec<f64>, Vec<f64>, Vec<Vec<f64>>), CliError> {
    let n_r = r
        .iter()
        .skip(1)
        .position(|&x| x == r[0])
        .map_or(r.len(), |p| p + 1);
    if n_r == 0 || t.len() % n_r != 0 {
        return Err(CliError::Io("(t, r) table is not a full grid".into()));
    }
    let radii = r[..n_r].to_vec();
    let times: Vec<f64> = t.iter().step_by(n_r).copied().collect();
    let rows = v.chunks(n_r).map(|c| c.to_vec()).collect();
    Ok((times, radii, rows))
}

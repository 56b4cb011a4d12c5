//! Tabular output (CSV, JSON) and the run metadata sidecar.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::config::{Format, RunConfig};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Bool(bool),
}

impl Cell {
    /// Floats use 17 significant digits so values round-trip exactly.
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) if v.is_nan() => "nan".into(),
            Cell::Num(v) if v.is_infinite() => if *v > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::Num(v) => format!("{v:.16e}"),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => number(*v),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Bool(b) => Value::Bool(*b),
        }
    }
}

/// JSON number, with non-finite values spelled as strings.
pub fn number(v: f64) -> Value {
    if v.is_nan() {
        Value::String("nan".into())
    } else if v.is_infinite() {
        Value::String(if v > 0.0 { "inf" } else { "-inf" }.into())
    } else {
        json!(v)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> =
                        self.columns.iter().cloned().zip(row.iter().map(Cell::json)).collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

/// The sections of the config that determine the results. Output settings
/// are left out so the same run written elsewhere hashes identically.
pub fn physics_echo(cfg: &RunConfig) -> Value {
    json!({
        "device": to_value(&cfg.device),
        "drive": to_value(&cfg.drive),
        "experiment": to_value(&cfg.experiment),
    })
}

/// SHA-256 of the canonical (sorted-key, compact) JSON form of the config.
pub fn config_hash(cfg: &RunConfig) -> String {
    let canonical = serde_json::to_string(&physics_echo(cfg)).expect("config serializes");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("value serializes")
}

pub struct Writer {
    dir: PathBuf,
    formats: Vec<Format>,
}

impl Writer {
    pub fn new(dir: &Path, formats: &[Format]) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), formats: formats.to_vec() })
    }

    fn write(&self, file: &str, contents: &str) -> io::Result<PathBuf> {
        let path = self.dir.join(file);
        fs::write(&path, contents)?;
        Ok(path)
    }

    pub fn write_json(&self, file: &str, value: &Value) -> io::Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).expect("json serializes");
        text.push('\n');
        self.write(file, &text)
    }

    /// Writes `<name>.csv` and/or `<name>.json` as selected.
    pub fn write_table(&self, name: &str, table: &Table) -> io::Result<Vec<PathBuf>> {
        let mut paths = Vec::new();
        for format in &self.formats {
            paths.push(match format {
                Format::Csv => self.write(&format!("{name}.csv"), &table.to_csv())?,
                Format::Json => self.write_json(&format!("{name}.json"), &table.to_json())?,
            });
        }
        Ok(paths)
    }

    /// Writes `<name>.meta.json` with the config echo, its hash and `extra`.
    pub fn write_meta(
        &self,
        name: &str,
        cfg: &RunConfig,
        integrator_step: Option<f64>,
        extra: Map<String, Value>,
    ) -> io::Result<PathBuf> {
        let mut meta = Map::new();
        meta.insert("command".into(), json!(name));
        meta.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        meta.insert("config_sha256".into(), json!(config_hash(cfg)));
        meta.insert("n_max".into(), json!(cfg.device.n_max));
        meta.insert("integrator_step_ns".into(), integrator_step.map_or(Value::Null, number));
        meta.insert("config".into(), physics_echo(cfg));
        meta.extend(extra);
        self.write_json(&format!("{name}.meta.json"), &Value::Object(meta))
    }
}

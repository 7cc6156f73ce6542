//! CSV tables and the JSON run summary.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::CliError;

/// One CSV file: named columns, each with a unit.
pub struct Table {
    pub file: String,
    columns: Vec<(String, String)>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: &str, columns: &[(&str, &str)]) -> Self {
        Self {
            file: file.to_string(),
            columns: columns.iter().map(|(c, u)| (c.to_string(), u.to_string())).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width in {}", self.file);
        self.rows.push(row);
    }

    fn write(&self, dir: &Path) -> Result<(), CliError> {
        let path = dir.join(&self.file);
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
        w.write_record(self.columns.iter().map(|c| c.0.as_str())).map_err(io)?;
        for row in &self.rows {
            w.write_record(row).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }

    fn describe(&self) -> Value {
        let columns: Vec<Value> = self
            .columns
            .iter()
            .map(|(name, unit)| json!({ "name": name, "unit": unit }))
            .collect();
        json!({ "file": self.file, "rows": self.rows.len(), "columns": columns })
    }
}

/// Shortest round-trip decimal, switching to exponent form for very small
/// or very large magnitudes.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 {
        "0".into()
    } else if !v.is_finite() || (1e-4..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn int(v: impl std::fmt::Display) -> String {
    v.to_string()
}

/// Everything one subcommand produces.
pub struct RunOutput {
    pub figure: Option<&'static str>,
    pub tables: Vec<Table>,
    pub results: Map<String, Value>,
    /// Set when a tolerance check failed after the outputs were assembled.
    pub failure: Option<String>,
}

impl RunOutput {
    pub fn new(figure: Option<&'static str>) -> Self {
        Self {
            figure,
            tables: Vec::new(),
            results: Map::new(),
            failure: None,
        }
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.results.insert(key.to_string(), value.into());
    }
}

pub struct Metadata {
    pub subcommand: &'static str,
    pub config: Value,
    pub threads: usize,
    pub wall_time: f64,
}

/// Write every table and `<subcommand>_summary.json` into `dir`.
pub fn write_run(dir: &Path, out: &RunOutput, meta: &Metadata) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    for t in &out.tables {
        t.write(dir)?;
    }
    let summary = json!({
        "subcommand": meta.subcommand,
        "figure": out.figure,
        "status": if out.failure.is_some() { "tolerance_failure" } else { "ok" },
        "tables": out.tables.iter().map(Table::describe).collect::<Vec<_>>(),
        "results": Value::Object(out.results.clone()),
        "metadata": {
            "config": meta.config,
            "versions": {
                "spinkrylov": env!("CARGO_PKG_VERSION"),
                "summary_format": 1,
            },
            "threads": meta.threads,
            "wall_time_s": meta.wall_time,
            "determinism": "no random numbers are drawn; tables are byte-identical across re-runs, threads = 1 is the serial reference",
        },
    });
    let path = dir.join(format!("{}_summary.json", meta.subcommand));
    let text = serde_json::to_string_pretty(&summary).expect("summary is valid JSON") + "\n";
    fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

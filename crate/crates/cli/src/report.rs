use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::Format;
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
        }
    }
}

/// One thresholded quantity. NaN never passes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            relation: Relation::AtMost,
            threshold,
            pass: value <= threshold,
        }
    }

    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            relation: Relation::AtLeast,
            threshold,
            pass: value >= threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// What an experiment computes, before it is stamped with its configuration.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub metrics: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
}

impl Outcome {
    pub fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.to_string(), value);
    }

    pub fn check(&mut self, check: Check) {
        self.checks.push(check);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: String,
    pub parameters: BTreeMap<String, Value>,
    pub seed: u64,
    pub metrics: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl Summary {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn table_bytes(table: &Table, format: Format) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    match format {
        Format::Csv => {
            let header: Vec<&str> = table.header.iter().map(String::as_str).collect();
            ldgf_core::io::write_table_csv(&header, &table.rows, &mut buf)?;
        }
        Format::Json => {
            let doc = serde_json::json!({ "columns": table.header, "rows": table.rows });
            serde_json::to_writer_pretty(&mut buf, &doc).map_err(ldgf_core::Error::from)?;
            buf.push(b'\n');
        }
    }
    Ok(buf)
}

/// Writes the summary and tables under `root/<experiment>/`; returns the
/// paths written, summary first.
pub fn write_outputs(
    root: &Path,
    summary: &Summary,
    tables: &[Table],
    format: Format,
) -> Result<Vec<PathBuf>, CliError> {
    let dir = root.join(&summary.experiment);
    std::fs::create_dir_all(&dir)?;
    let mut written = Vec::new();
    let mut json = serde_json::to_vec_pretty(summary).map_err(ldgf_core::Error::from)?;
    json.push(b'\n');
    let path = dir.join("summary.json");
    write_atomic(&path, &json)?;
    written.push(path);
    for t in tables {
        let path = dir.join(format!("{}.{}", t.name, format.extension()));
        write_atomic(&path, &table_bytes(t, format)?)?;
        written.push(path);
    }
    Ok(written)
}

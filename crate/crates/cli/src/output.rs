//! Result tables and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::{Format, Params, RunConfig};
use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

/// Named columns with one string per cell, written as CSV or as a JSON array
/// of row objects.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: Vec<&'static str>) -> Self {
        Self {
            name: name.into(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn schema_line(&self) -> String {
        format!("# schema: rbm/{}/v{SCHEMA_VERSION}", self.name)
    }

    pub fn to_csv(&self) -> CliResult<Vec<u8>> {
        let mut buf = Vec::new();
        writeln!(buf, "{}", self.schema_line()).expect("writing to memory");
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            let fail = |e: csv::Error| CliError::Config(format!("csv encoding: {e}"));
            w.write_record(&self.columns).map_err(fail)?;
            for r in &self.rows {
                w.write_record(r).map_err(fail)?;
            }
            w.flush().map_err(|e| CliError::io(&self.name, e))?;
        }
        Ok(buf)
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let mut m = Map::new();
                for (c, v) in self.columns.iter().zip(r) {
                    m.insert((*c).to_string(), Value::String(v.clone()));
                }
                Value::Object(m)
            })
            .collect();
        let mut top = Map::new();
        top.insert("schema".into(), Value::String(format!("rbm/{}/v{SCHEMA_VERSION}", self.name)));
        top.insert(
            "columns".into(),
            Value::Array(self.columns.iter().map(|c| Value::String((*c).into())).collect()),
        );
        top.insert("rows".into(), Value::Array(rows));
        Value::Object(top)
    }
}

/// Everything a run produced.
#[derive(Debug, Default)]
pub struct Outputs {
    pub tables: Vec<Table>,
    /// Extra JSON documents by file stem.
    pub documents: Vec<(String, Value)>,
    pub summary: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    schema_version: u32,
    #[serde(flatten)]
    params: &'a Params,
    master_seed: Option<u64>,
    format: Format,
    outputs: Vec<String>,
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Writes every table and document, then the manifest; returns the paths
/// written.
pub fn write_all(config: &RunConfig, outputs: &Outputs) -> CliResult<Vec<PathBuf>> {
    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut names = Vec::new();
    let mut written = Vec::new();
    for t in &outputs.tables {
        let (name, bytes) = match config.format {
            Format::Csv => (format!("{}.csv", t.name), t.to_csv()?),
            Format::Json => (format!("{}.json", t.name), pretty(&t.to_json())?),
        };
        let path = dir.join(&name);
        write_file(&path, &bytes)?;
        names.push(name);
        written.push(path);
    }
    for (stem, doc) in &outputs.documents {
        let name = format!("{stem}.json");
        let path = dir.join(&name);
        write_file(&path, &pretty(doc)?)?;
        names.push(name);
        written.push(path);
    }
    let manifest = Manifest {
        tool: "rbm",
        version: env!("CARGO_PKG_VERSION"),
        schema_version: SCHEMA_VERSION,
        params: &config.params,
        master_seed: config.params.seed(),
        format: config.format,
        outputs: names,
    };
    let path = dir.join(format!("{}.manifest.json", config.params.name()));
    let value = serde_json::to_value(&manifest).map_err(|e| CliError::Config(e.to_string()))?;
    write_file(&path, &pretty(&value)?)?;
    written.push(path);
    Ok(written)
}

fn pretty(v: &Value) -> CliResult<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(v).map_err(|e| CliError::Config(e.to_string()))?;
    s.push(b'\n');
    Ok(s)
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

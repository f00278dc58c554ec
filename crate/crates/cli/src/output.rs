//! Tabular output with a `# key=value` parameter header, written as CSV,
//! JSON, or both.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Both,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Missing,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) if v.is_finite() => v.to_string(),
            Cell::Num(_) | Cell::Missing => String::new(),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Int(v) => Value::from(*v),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Missing => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Missing, Into::into)
    }
}

/// Effective run parameters, in insertion order.
#[derive(Debug, Clone, Default)]
pub struct Params(Vec<(String, String)>);

impl Params {
    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        let value = value.to_string();
        match self.0.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.0.push((key.to_string(), value)),
        }
        self
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.0
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: vec![] }
    }

    pub fn with_columns(name: impl Into<String>, columns: Vec<String>) -> Self {
        Self { name: name.into(), columns, rows: vec![] }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width mismatch in {}", self.name);
        self.rows.push(row);
    }
}

pub struct Sink {
    pub dir: PathBuf,
    pub format: Format,
}

impl Sink {
    pub fn new(dir: &Path, format: Format) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), format })
    }

    /// Writes the table and returns the paths created.
    pub fn write(&self, table: &Table, params: &Params) -> Result<Vec<PathBuf>> {
        let mut out = vec![];
        if matches!(self.format, Format::Csv | Format::Both) {
            let path = self.dir.join(format!("{}.csv", table.name));
            write_csv(&path, table, params)?;
            out.push(path);
        }
        if matches!(self.format, Format::Json | Format::Both) {
            let path = self.dir.join(format!("{}.json", table.name));
            write_json(&path, table, params)?;
            out.push(path);
        }
        Ok(out)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot write {}", path.display()))?))
}

fn write_csv(path: &Path, table: &Table, params: &Params) -> Result<()> {
    let mut f = create(path)?;
    for (k, v) in params.entries() {
        writeln!(f, "# {k}={v}")?;
    }
    let mut w = csv::Writer::from_writer(f);
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::csv))?;
    }
    w.flush()?;
    Ok(())
}

fn write_json(path: &Path, table: &Table, params: &Params) -> Result<()> {
    let parameters: Map<String, Value> = params.entries().iter().map(|(k, v)| (k.clone(), Value::from(v.as_str()))).collect();
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|row| Value::Object(table.columns.iter().cloned().zip(row.iter().map(Cell::json)).collect()))
        .collect();
    let mut doc = Map::new();
    doc.insert("parameters".into(), Value::Object(parameters));
    doc.insert("rows".into(), Value::Array(rows));
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, &Value::Object(doc))?;
    writeln!(f)?;
    Ok(())
}

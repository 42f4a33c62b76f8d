//! Rendering of results as CSV or JSON, and atomic file output.

use serde_json::{Map, Number, Value};
use std::io::Write;
use std::path::Path;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    Null,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Null, Cell::Num)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    /// Named values; dots in a key nest the JSON objects.
    Record(Vec<(String, Cell)>),
    Table(Table),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Output {
    /// Fails on the first NaN or infinity, naming where it sits.
    pub fn ensure_finite(&self) -> Result<(), CliError> {
        let bad = |c: &Cell| matches!(c, Cell::Num(v) if !v.is_finite());
        match self {
            Output::Record(fields) => match fields.iter().find(|(_, c)| bad(c)) {
                Some((k, c)) => Err(CliError::NonFinite(format!("{k} = {c:?}"))),
                None => Ok(()),
            },
            Output::Table(t) => {
                for (i, row) in t.rows.iter().enumerate() {
                    if let Some(j) = row.iter().position(bad) {
                        return Err(CliError::NonFinite(format!("row {i}, column {}", t.header[j])));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn render(&self, format: Format) -> Result<String, CliError> {
        self.ensure_finite()?;
        match (self, format) {
            (Output::Table(t), Format::Csv) => csv_text(&t.header, &t.rows),
            (Output::Record(f), Format::Csv) => {
                let rows: Vec<Vec<Cell>> = f
                    .iter()
                    .map(|(k, v)| vec![Cell::Text(k.clone()), v.clone()])
                    .collect();
                csv_text(&["key", "value"], &rows)
            }
            (Output::Record(f), Format::Json) => {
                let mut root = Map::new();
                for (k, v) in f {
                    insert_nested(&mut root, k, json_cell(v));
                }
                json_text(&Value::Object(root))
            }
            (Output::Table(t), Format::Json) => {
                let rows: Vec<Value> = t
                    .rows
                    .iter()
                    .map(|r| {
                        Value::Object(
                            t.header
                                .iter()
                                .zip(r)
                                .map(|(h, c)| (h.to_string(), json_cell(c)))
                                .collect(),
                        )
                    })
                    .collect();
                json_text(&Value::Array(rows))
            }
        }
    }
}

fn csv_field(c: &Cell) -> String {
    match c {
        Cell::Num(v) => format!("{v:.12e}"),
        Cell::Int(v) => v.to_string(),
        Cell::Bool(b) => b.to_string(),
        Cell::Text(s) => s.clone(),
        Cell::Null => String::new(),
    }
}

fn csv_text(header: &[&str], rows: &[Vec<Cell>]) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r.iter().map(csv_field)).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}

fn json_cell(c: &Cell) -> Value {
    match c {
        Cell::Num(v) => Number::from_f64(*v).map_or(Value::Null, Value::Number),
        Cell::Int(v) => Value::from(*v),
        Cell::Bool(b) => Value::Bool(*b),
        Cell::Text(s) => Value::String(s.clone()),
        Cell::Null => Value::Null,
    }
}

fn insert_nested(root: &mut Map<String, Value>, key: &str, v: Value) {
    match key.split_once('.') {
        None => {
            root.insert(key.to_string(), v);
        }
        Some((head, rest)) => {
            let child = root
                .entry(head.to_string())
                .or_insert_with(|| Value::Object(Map::new()));
            if let Value::Object(m) = child {
                insert_nested(m, rest, v);
            }
        }
    }
}

fn json_text(v: &Value) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Writes through a temporary file in the destination directory and renames
/// it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(())
}

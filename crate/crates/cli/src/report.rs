//! Tabular reports and their CSV / JSON emission.

use crate::config::Format;
use crate::error::CliResult;
use serde_json::{json, Map, Value};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Str(String),
    Int(i64),
    Float(f64),
    Bool(bool),
    Empty,
}

impl Cell {
    pub fn text(&self) -> String {
        match self {
            Cell::Str(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => float_text(*x),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Str(s) => Value::String(s.clone()),
            Cell::Int(i) => json!(i),
            Cell::Float(x) if x.is_finite() => json!(x),
            Cell::Float(x) => Value::String(float_text(*x)),
            Cell::Bool(b) => json!(b),
            Cell::Empty => Value::Null,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Float(x) => Some(*x),
            Cell::Int(i) => Some(*i as f64),
            _ => None,
        }
    }
}

fn float_text(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.9e}")
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Str(s.to_string())
    }
}
impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Str(s)
    }
}
impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}
impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}
impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Str(x.to_string())
    }
}
impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}
impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Self {
        x.map_or(Cell::Empty, Into::into)
    }
}

/// A table whose first `key_columns` columns identify a row.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub name: String,
    pub columns: Vec<String>,
    pub key_columns: usize,
    pub rows: Vec<Vec<Cell>>,
}

impl Report {
    pub fn new(name: &str, columns: &[&str], key_columns: usize) -> Self {
        Report { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), key_columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width of report {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Sorts rows by their key cells (stable, by rendered text with numeric
    /// cells compared numerically).
    pub fn sort(&mut self) {
        let k = self.key_columns;
        self.rows.sort_by(|a, b| {
            for (x, y) in a[..k].iter().zip(&b[..k]) {
                let ord = match (x.as_f64(), y.as_f64()) {
                    (Some(p), Some(q)) => p.total_cmp(&q),
                    _ => x.text().cmp(&y.text()),
                };
                if ord.is_ne() {
                    return ord;
                }
            }
            std::cmp::Ordering::Equal
        });
    }

    pub fn to_csv(&self) -> CliResult<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::text))?;
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    /// `{"columns": [...], "name": ..., "rows": [{...}]}`; object keys are sorted.
    pub fn to_json_value(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Object(self.columns.iter().cloned().zip(r.iter().map(Cell::json)).collect::<Map<_, _>>()))
            .collect();
        json!({ "name": self.name, "columns": self.columns, "rows": rows })
    }

    pub fn render(&self, format: Format) -> CliResult<String> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => Ok(serde_json::to_string_pretty(&self.to_json_value())? + "\n"),
        }
    }

    pub fn write(&self, dir: &Path, format: Format) -> CliResult<PathBuf> {
        let ext = match format {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        let path = dir.join(format!("{}.{ext}", self.name));
        std::fs::write(&path, self.render(format)?)?;
        Ok(path)
    }
}

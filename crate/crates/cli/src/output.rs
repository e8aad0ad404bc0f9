//! Tables written as CSV or JSON by a single writer.

use std::fmt::Write as _;
use std::io::{self, Write};

use serde_json::{Map, Number, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            // 17 significant digits
            Cell::Num(x) => format!("{x:.16e}"),
            Cell::Int(n) => n.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => Number::from_f64(*x).map(Value::Number).unwrap_or(Value::Null),
            Cell::Int(n) => Value::from(*n),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Text(s) if s.is_empty() => Value::Null,
            Cell::Text(s) => Value::String(s.clone()),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut out = self.header.join(",");
                out.push('\n');
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    let _ = writeln!(out, "{}", cells.join(","));
                }
                out
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let obj: Map<String, Value> =
                            self.header.iter().zip(row).map(|(h, c)| (h.to_string(), c.json())).collect();
                        Value::Object(obj)
                    })
                    .collect();
                let mut s = serde_json::to_string_pretty(&Value::Array(rows)).unwrap_or_default();
                s.push('\n');
                s
            }
        }
    }
}

/// Write to `path`, or stdout when there is none.
pub fn emit(text: &str, path: Option<&str>) -> io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_json() {
        let mut t = Table::new(&["x", "n", "why"]);
        t.push(vec![Cell::Num(0.1), Cell::Int(3), Cell::Text(String::new())]);
        t.push(vec![Cell::Num(f64::NAN), Cell::Int(-1), Cell::Text("a, b".into())]);
        assert_eq!(t.render(Format::Csv), "x,n,why\n1.0000000000000001e-1,3,\nNaN,-1,\"a, b\"\n");
        let v: Value = serde_json::from_str(&t.render(Format::Json)).unwrap();
        assert_eq!(v[0]["n"], 3);
        assert!(v[1]["x"].is_null() && v[0]["why"].is_null());
    }
}

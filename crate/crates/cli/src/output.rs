//! CSV and JSON emission.
//!
//! Reals are printed with 12 significant digits: `%.12e` in CSV, the value
//! rounded to 12 digits in JSON. Non-finite reals are `nan`/`inf` in CSV and
//! `null` in JSON.

use serde_json::{Map, Value};

use crate::config::OutputFormat;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    Missing,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Real(x) => sci12(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    pub fn json(&self) -> Value {
        match self {
            Cell::Real(x) => real12(*x),
            Cell::Int(n) => Value::from(*n),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Missing => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Real)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as u64)
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

/// C `printf("%.12e")`: mantissa with 12 decimals, signed exponent of at
/// least two digits.
pub fn sci12(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// `x` rounded to 12 significant digits, or `null` when not finite.
pub fn real12(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("round trip");
    serde_json::Number::from_f64(rounded).map_or(Value::Null, Value::Number)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn record(&self, i: usize) -> Value {
        let mut m = Map::new();
        for (c, v) in self.columns.iter().zip(&self.rows[i]) {
            m.insert(c.clone(), v.json());
        }
        Value::Object(m)
    }

    pub fn records(&self) -> Value {
        Value::Array((0..self.rows.len()).map(|i| self.record(i)).collect())
    }

    fn write_csv(&self, out: &mut Vec<u8>) -> std::io::Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))?;
        }
        w.flush()
    }
}

/// What a command emits: CSV tables (separated by a blank line) or one JSON
/// document.
#[derive(Debug, Clone, PartialEq)]
pub struct Emission {
    pub tables: Vec<Table>,
    pub json: Value,
}

impl Emission {
    pub fn render(&self, format: OutputFormat) -> Vec<u8> {
        match format {
            OutputFormat::Csv => {
                let mut out = Vec::new();
                for (i, t) in self.tables.iter().enumerate() {
                    if i > 0 {
                        out.push(b'\n');
                    }
                    t.write_csv(&mut out).expect("writing to memory");
                }
                out
            }
            OutputFormat::Json => {
                let mut out = serde_json::to_vec_pretty(&self.json).expect("serializable");
                out.push(b'\n');
                out
            }
        }
    }
}

//! CSV, flat JSON and gnuplot emitters.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::{Map, Value};

pub const SCHEMA_VERSION: u64 = 1;

/// `%.12g`: twelve significant digits, trailing zeros trimmed.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!(
            "{}e{sign}{:02}",
            trim_zeros(mantissa.to_string()),
            exp.abs()
        )
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Comma-separated table with a header row.
#[derive(Debug, Clone, Default)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for line in std::iter::once(&self.header).chain(&self.rows) {
            let cells: Vec<String> = line.iter().map(|c| quote(c)).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

fn quote(cell: &str) -> String {
    if cell.contains([',', '"', '\n']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

/// Builder for the flat JSON reports.
#[derive(Debug, Clone)]
pub struct Report(Map<String, Value>);

impl Report {
    pub fn new(kind: &str) -> Self {
        let mut map = Map::new();
        map.insert("schema_version".into(), Value::from(SCHEMA_VERSION));
        map.insert("report".into(), Value::from(kind));
        Report(map)
    }

    /// Non-finite values become strings, since JSON has no infinity.
    pub fn float(&mut self, key: &str, x: f64) -> &mut Self {
        self.0.insert(key.into(), float_value(x));
        self
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.0.insert(key.into(), value.into());
        self
    }

    pub fn floats(&mut self, key: &str, xs: &[f64]) -> &mut Self {
        self.0.insert(
            key.into(),
            Value::Array(xs.iter().map(|&x| float_value(x)).collect()),
        );
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.0).expect("maps of plain values serialize");
        s.push('\n');
        s
    }
}

fn float_value(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else {
        Value::from(num(x))
    }
}

/// Gnuplot script plotting `columns` of the CSV at `data` against column 1.
pub fn gnuplot_script(data: &Path, table: &Table, columns: &[usize]) -> String {
    let header = table.header();
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set key autotitle columnhead");
    let _ = writeln!(s, "set xlabel '{}'", header[0]);
    if let [only] = columns {
        let _ = writeln!(s, "set ylabel '{}'", header[*only]);
    }
    let plots: Vec<String> = columns
        .iter()
        .map(|c| format!("'{}' using 1:{} with linespoints", data.display(), c + 1))
        .collect();
    let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    s
}

//! Report assembly and serialisation.
//!
//! Reports are serialised through `serde_json` with `BTreeMap`-backed
//! objects, so key order is stable. Floats are written with 17 significant
//! digits. Wall-clock data lives under `meta` and is the only part of a
//! report that differs between identical runs.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

use crate::error::CliError;

/// Plot-ready rectangular table of floats.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "table rows must be rectangular"
        );
        self.rows.push(row);
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// RFC 4180 CSV with a header row and LF line endings.
    pub fn write_csv(&self, path: &Path) -> Result<(), CliError> {
        let io_err = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(path)
            .map_err(io_err)?;
        w.write_record(&self.columns).map_err(io_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format_f64(*v)))
                .map_err(io_err)?;
        }
        w.flush()
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}

/// Full-precision, locale-free float text.
pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub value: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub passed: bool,
}

/// What an analysis hands back: scalar outputs, an optional table and checks.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub outputs: BTreeMap<String, Value>,
    pub table: Option<Table>,
    pub tolerances: BTreeMap<String, f64>,
    pub assertions: Vec<Assertion>,
}

impl Outcome {
    pub fn output(&mut self, key: &str, value: impl Into<Value>) {
        self.outputs.insert(key.to_string(), value.into());
    }

    /// Records `name: value <= tol`. `tol_key` names the tolerance in the report.
    pub fn at_most(&mut self, name: &str, value: f64, tol_key: &str, tol: f64) {
        self.tolerances.insert(tol_key.to_string(), tol);
        self.assertions.push(Assertion {
            name: name.to_string(),
            value: value.into(),
            tolerance: Some(tol),
            passed: value <= tol,
        });
    }

    pub fn holds(&mut self, name: &str, value: bool) {
        self.assertions.push(Assertion {
            name: name.to_string(),
            value: value.into(),
            tolerance: None,
            passed: value,
        });
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub version: &'static str,
    pub duration_seconds: f64,
    pub timestamp_unix: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub inputs: BTreeMap<String, Value>,
    pub outputs: BTreeMap<String, Value>,
    pub tolerances: BTreeMap<String, f64>,
    pub assertions: Vec<Assertion>,
    pub passed: bool,
    pub meta: Meta,
}

impl Report {
    pub fn new(
        command: &str,
        inputs: BTreeMap<String, Value>,
        outcome: Outcome,
        meta: Meta,
    ) -> Self {
        let passed = outcome.passed();
        let mut outputs = outcome.outputs;
        if let Some(table) = outcome.table {
            outputs.insert(
                "table".to_string(),
                serde_json::to_value(table).expect("table serializes"),
            );
        }
        Self {
            command: command.to_string(),
            inputs,
            outputs,
            tolerances: outcome.tolerances,
            assertions: outcome.assertions,
            passed,
            meta,
        }
    }
}

/// Pretty JSON with every float at 17 significant digits.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut buf, FullPrecision(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("report serializes");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

struct FullPrecision<'a>(PrettyFormatter<'a>);

impl Formatter for FullPrecision<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_f64(value).as_bytes())
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_carry_seventeen_digits() {
        let s = to_json_string(&serde_json::json!({"a": 0.1, "b": 3, "c": -2.5e-300}));
        assert!(s.contains("\"a\": 1.0000000000000001e-1"), "{s}");
        assert!(s.contains("\"b\": 3"));
        assert!(s.contains("-2.5000000000000000e-300"));
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["a"].as_f64(), Some(0.1));
    }

    #[test]
    fn round_trip_is_exact() {
        for v in [std::f64::consts::PI, 1.0 / 3.0, 5e-324, f64::MAX, -0.0] {
            let s = format_f64(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
    }

    #[test]
    fn assertions_combine() {
        let mut o = Outcome::default();
        o.at_most("a", 1e-3, "residual", 1e-2);
        assert!(o.passed());
        o.holds("b", false);
        assert!(!o.passed());
        assert_eq!(o.tolerances["residual"], 1e-2);
    }

    #[test]
    #[should_panic(expected = "rectangular")]
    fn ragged_rows_are_rejected() {
        Table::new(&["a", "b"]).push(vec![1.0]);
    }
}

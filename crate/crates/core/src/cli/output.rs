//! Deterministic CSV and JSON artifacts.
//!
//! Floats are written in scientific notation with 17 significant digits,
//! `.` as decimal separator and `\n` line endings. Non-finite values become
//! `null` in JSON and `NaN`/`inf` in CSV.

use std::str::FromStr;

use serde_json::{Map, Number, Value as Json};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Int(i64),
    Null,
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Num(x)
    }
}

impl From<Option<f64>> for Value {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Value::Null, Value::Num)
    }
}

impl From<usize> for Value {
    fn from(x: usize) -> Self {
        Value::Int(x as i64)
    }
}

impl From<u32> for Value {
    fn from(x: u32) -> Self {
        Value::Int(x as i64)
    }
}

impl From<i64> for Value {
    fn from(x: i64) -> Self {
        Value::Int(x)
    }
}

pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

impl Value {
    fn csv(&self) -> String {
        match self {
            Value::Num(x) => fmt_num(*x),
            Value::Int(i) => i.to_string(),
            Value::Null => String::new(),
        }
    }

    fn json(&self) -> Json {
        match self {
            Value::Num(x) if x.is_finite() => {
                Json::Number(Number::from_str(&fmt_num(*x)).expect("formatted float is valid JSON"))
            }
            Value::Num(_) | Value::Null => Json::Null,
            Value::Int(i) => Json::from(*i),
        }
    }
}

/// A named output: either a table of rows or a single record.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub stem: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
    pub record: bool,
    pub default_format: Format,
}

impl Artifact {
    pub fn table(stem: &str, columns: Vec<&'static str>, default_format: Format) -> Self {
        Self {
            stem: stem.to_string(),
            columns,
            rows: Vec::new(),
            record: false,
            default_format,
        }
    }

    pub fn record(stem: &str, fields: Vec<(&'static str, Value)>) -> Self {
        let (columns, row) = fields.into_iter().unzip();
        Self {
            stem: stem.to_string(),
            columns,
            rows: vec![row],
            record: true,
            default_format: Format::Json,
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn file_name(&self, format: Format) -> String {
        format!("{}.{}", self.stem, format.extension())
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.render_csv(),
            Format::Json => self.render_json(),
        }
    }

    fn render_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Value::csv))
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }

    fn object(&self, row: &[Value]) -> Json {
        let map: Map<String, Json> = self
            .columns
            .iter()
            .zip(row)
            .map(|(k, v)| (k.to_string(), v.json()))
            .collect();
        Json::Object(map)
    }

    fn render_json(&self) -> String {
        let value = if self.record {
            self.object(&self.rows[0])
        } else {
            Json::Array(self.rows.iter().map(|r| self.object(r)).collect())
        };
        let mut s = serde_json::to_string_pretty(&value).expect("serializable");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_num(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_num(0.0), "0.0000000000000000e0");
        assert_eq!(fmt_num(-0.375), "-3.7500000000000000e-1");
        for x in [0.1, 1.0 / 3.0, -6.98e-3, 1e300, 5e-324] {
            assert_eq!(fmt_num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn csv_table() {
        let mut a = Artifact::table("t", vec!["x", "n", "y"], Format::Csv);
        a.push(vec![0.5.into(), 3usize.into(), Value::Null]);
        assert_eq!(a.render(Format::Csv), "x,n,y\n5.0000000000000000e-1,3,\n");
        assert_eq!(a.file_name(Format::Csv), "t.csv");
    }

    #[test]
    fn json_record_keeps_field_order_and_digits() {
        let a = Artifact::record(
            "s",
            vec![("b", 0.25.into()), ("a", f64::NAN.into()), ("n", 2u32.into())],
        );
        assert_eq!(
            a.render(Format::Json),
            "{\n  \"b\": 2.5000000000000000e-1,\n  \"a\": null,\n  \"n\": 2\n}\n"
        );
        let parsed: serde_json::Value = serde_json::from_str(&a.render(Format::Json)).unwrap();
        assert_eq!(parsed["b"].as_f64(), Some(0.25));
    }

    #[test]
    fn json_table_is_array() {
        let mut a = Artifact::table("t", vec!["x"], Format::Csv);
        a.push(vec![1.0.into()]);
        a.push(vec![2.0.into()]);
        let parsed: serde_json::Value = serde_json::from_str(&a.render(Format::Json)).unwrap();
        assert_eq!(parsed.as_array().unwrap().len(), 2);
    }
}

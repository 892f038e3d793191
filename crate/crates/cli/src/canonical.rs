//! Canonical JSON and CSV encodings of reports.
//!
//! Object keys are sorted bytewise, floats are written with 17 significant
//! digits in exponent form, and non-finite floats become the strings
//! `"inf"`, `"-inf"` and `"nan"`.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_value::Value;

use crate::error::CliError;

/// A serialized payload that keeps non-finite floats intact.
pub type Tree = Value;

pub fn to_tree<T: Serialize + ?Sized>(value: &T) -> Result<Tree, CliError> {
    serde_value::to_value(value).map_err(|e| CliError::Internal(format!("serialization: {e}")))
}

/// Float text with 17 significant digits.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        let x = if x == 0.0 { 0.0 } else { x };
        format!("{x:.16e}")
    }
}

/// Canonical JSON bytes, newline terminated.
pub fn to_canonical_json(tree: &Tree) -> Vec<u8> {
    let mut out = String::new();
    write_value(tree, &mut out);
    out.push('\n');
    out.into_bytes()
}

fn write_value(v: &Value, out: &mut String) {
    match v {
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::U8(x) => out.push_str(&x.to_string()),
        Value::U16(x) => out.push_str(&x.to_string()),
        Value::U32(x) => out.push_str(&x.to_string()),
        Value::U64(x) => out.push_str(&x.to_string()),
        Value::I8(x) => out.push_str(&x.to_string()),
        Value::I16(x) => out.push_str(&x.to_string()),
        Value::I32(x) => out.push_str(&x.to_string()),
        Value::I64(x) => out.push_str(&x.to_string()),
        Value::F32(x) => write_float(*x as f64, out),
        Value::F64(x) => write_float(*x, out),
        Value::Char(c) => write_string(&c.to_string(), out),
        Value::String(s) => write_string(s, out),
        Value::Unit => out.push_str("null"),
        Value::Option(None) => out.push_str("null"),
        Value::Option(Some(inner)) | Value::Newtype(inner) => write_value(inner, out),
        Value::Seq(items) => {
            out.push('[');
            for (k, item) in items.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                write_value(item, out);
            }
            out.push(']');
        }
        Value::Map(map) => {
            let sorted: BTreeMap<String, &Value> =
                map.iter().map(|(k, v)| (key_text(k), v)).collect();
            out.push('{');
            for (k, (key, item)) in sorted.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                write_string(key, out);
                out.push(':');
                write_value(item, out);
            }
            out.push('}');
        }
        Value::Bytes(bytes) => write_value(
            &Value::Seq(bytes.iter().map(|b| Value::U8(*b)).collect()),
            out,
        ),
    }
}

fn write_float(x: f64, out: &mut String) {
    if x.is_finite() {
        out.push_str(&format_float(x));
    } else {
        write_string(&format_float(x), out);
    }
}

fn write_string(s: &str, out: &mut String) {
    out.push_str(&serde_json::to_string(s).expect("strings serialize"));
}

/// Text of a scalar used as an object key or CSV cell.
pub fn key_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Char(c) => c.to_string(),
        Value::F32(x) => format_float(*x as f64),
        Value::F64(x) => format_float(*x),
        Value::Option(None) | Value::Unit => String::new(),
        Value::Option(Some(inner)) | Value::Newtype(inner) => key_text(inner),
        other => {
            let mut s = String::new();
            write_value(other, &mut s);
            s
        }
    }
}

/// A flat table for CSV output.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Tree>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Tree>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Internal(format!("csv: {e}"));
        writer.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            writer.write_record(row.iter().map(key_text)).map_err(io)?;
        }
        writer
            .into_inner()
            .map_err(|e| CliError::Internal(format!("csv: {e}")))
    }
}

/// Builds a cell from any serializable scalar.
pub fn cell<T: Serialize>(x: T) -> Tree {
    serde_value::to_value(x).expect("scalars serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(format_float(0.5), "5.0000000000000000e-1");
        assert_eq!(format_float(-0.0), "0.0000000000000000e0");
        assert_eq!(format_float(f64::INFINITY), "inf");
        let back: f64 = format_float(0.1 + 0.2).parse().unwrap();
        assert_eq!(back, 0.1 + 0.2);
    }

    #[test]
    fn keys_are_sorted_and_infinity_is_a_string() {
        let mut m = BTreeMap::new();
        m.insert("b", f64::INFINITY);
        m.insert("a", 1.0);
        let bytes = to_canonical_json(&to_tree(&m).unwrap());
        assert_eq!(
            String::from_utf8(bytes).unwrap(),
            "{\"a\":1.0000000000000000e0,\"b\":\"inf\"}\n"
        );
    }

    #[test]
    fn output_is_valid_json() {
        let v = serde_json::json!({"z": [1, 2.5, -3e-300, "x"], "a": {"k": null, "j": true}});
        let bytes = to_canonical_json(&to_tree(&v).unwrap());
        let back: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(back, v);
    }
}

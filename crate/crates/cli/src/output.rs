//! Deterministic JSON and RFC-4180 CSV emitters.

use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;
use serde_json::Value;

/// Compact JSON with sorted keys and floats at 17 significant digits.
/// Integers stay integers; non-finite floats never reach here (serde_json
/// maps them to null).
pub fn to_json_string(v: &Value) -> String {
    let mut out = String::new();
    emit(v, &mut out);
    out
}

fn emit(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                let x = n.as_f64().expect("f64 number");
                let _ = write!(out, "{x:.16e}");
            } else {
                let _ = write!(out, "{n}");
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                emit(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            // serde_json's default map is ordered by key
            out.push('{');
            for (i, (k, item)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                emit(item, out);
            }
            out.push('}');
        }
    }
}

pub fn write_csv_rows<T: Serialize, W: Write>(rows: &[T], w: W) -> csv::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for row in rows {
        wr.serialize(row)?;
    }
    wr.flush()?;
    Ok(())
}

/// Two-column `field,value` listing of the scalar top-level fields of a
/// JSON object; nested values are written as JSON text.
pub fn write_csv_report<W: Write>(v: &Value, w: W) -> csv::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["field", "value"])?;
    if let Value::Object(map) = v {
        for (k, item) in map {
            let text = match item {
                Value::String(s) => s.clone(),
                other => to_json_string(other),
            };
            wr.write_record([k.as_str(), text.as_str()])?;
        }
    }
    wr.flush()?;
    Ok(())
}

//! Canonical JSON: object keys sorted, every real printed with exactly six
//! decimals, two-space indentation, arrays of scalars on one line, LF line
//! endings and a trailing newline.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::Value;

use super::{write_bytes, AnalysisReport, ReportError};

fn format_real(v: f64) -> String {
    let s = format!("{v:.6}");
    if s.trim_start_matches('-').bytes().all(|b| b == b'0' || b == b'.') {
        "0.000000".to_string()
    } else {
        s
    }
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Array(_) | Value::Object(_))
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(u) = n.as_u64() {
                write!(out, "{u}").expect("write to string");
            } else if let Some(i) = n.as_i64() {
                write!(out, "{i}").expect("write to string");
            } else {
                out.push_str(&format_real(n.as_f64().unwrap_or(0.0)));
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string serializes")),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) if items.iter().all(is_scalar) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_value(out, item, indent);
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                push_indent(out, indent + 1);
                write_value(out, item, indent + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            push_indent(out, indent);
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, key) in keys.iter().enumerate() {
                push_indent(out, indent + 1);
                out.push_str(&serde_json::to_string(key).expect("key serializes"));
                out.push_str(": ");
                write_value(out, &map[key.as_str()], indent + 1);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            push_indent(out, indent);
            out.push('}');
        }
    }
}

fn push_indent(out: &mut String, indent: usize) {
    for _ in 0..indent {
        out.push_str("  ");
    }
}

/// Canonical text of any serializable value.
pub fn to_canonical_json<T: serde::Serialize>(value: &T) -> Result<String, ReportError> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    Ok(out)
}

pub fn emit_report_json(report: &AnalysisReport, path: &Path) -> Result<(), ReportError> {
    write_bytes(path, to_canonical_json(report)?.as_bytes())
}

pub fn parse_report_json(text: &str) -> Result<AnalysisReport, ReportError> {
    Ok(serde_json::from_str(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn canonical_layout() {
        let v = json!({"b": [1.0, 0.25, -0.0], "a": {"z": null, "y": "R1-V0", "x": 3}, "c": [[1, 2], []]});
        let text = to_canonical_json(&v).unwrap();
        assert_eq!(
            text,
            "{\n  \"a\": {\n    \"x\": 3,\n    \"y\": \"R1-V0\",\n    \"z\": null\n  },\n  \
             \"b\": [1.000000, 0.250000, 0.000000],\n  \"c\": [\n    [1, 2],\n    []\n  ]\n}\n"
        );
    }

    #[test]
    fn reals_are_six_decimals() {
        assert_eq!(format_real(1.0 / 1001.0), "0.000999");
        assert_eq!(format_real(200.0 / 3.0), "66.666667");
        assert_eq!(format_real(-1e-9), "0.000000");
        assert_eq!(format_real(-0.5), "-0.500000");
    }
}

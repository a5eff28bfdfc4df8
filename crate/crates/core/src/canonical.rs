//! Canonical JSON: object keys sorted, non-integer numbers printed with
//! exactly four fractional digits, no insignificant whitespace. Used for
//! every persisted document that must be byte-stable across runs.

use serde::Serialize;
use serde_json::{Number, Value};

use crate::error::Result;

pub const FRACTION_DIGITS: usize = 4;

pub fn to_canonical_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&v, &mut out, true);
    Ok(out)
}

/// Sorted keys and compact layout, but numbers in their shortest exact
/// form, so parsing gives back the same values.
pub fn to_canonical_string_exact<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&v, &mut out, false);
    Ok(out)
}

pub fn format_number(n: &Number) -> String {
    if n.is_i64() || n.is_u64() {
        return n.to_string();
    }
    let f = n.as_f64().unwrap_or(0.0);
    let s = format!("{f:.prec$}", prec = FRACTION_DIGITS);
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn write_value(v: &Value, out: &mut String, fixed: bool) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) if fixed => out.push_str(&format_number(n)),
        Value::Number(n) => out.push_str(&n.to_string()),
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string serialization")),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(item, out, fixed);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).expect("string serialization"));
                out.push(':');
                write_value(&map[k], out, fixed);
            }
            out.push('}');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn sorted_keys_and_fixed_decimals() {
        let v = json!({"b": 1.0, "a": [1, 2.5, -0.00001], "c": {"z": null, "y": "q\""}});
        assert_eq!(
            to_canonical_string(&v).unwrap(),
            r#"{"a":[1,2.5000,0.0000],"b":1.0000,"c":{"y":"q\"","z":null}}"#
        );
    }
}

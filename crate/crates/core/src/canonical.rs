//! Byte-stable JSON writer: keys sorted, floats at a fixed number of decimals.
//!
//! `serde_json`'s default `Map` is a `BTreeMap`, so object keys arrive sorted;
//! this writer only has to pin number formatting and layout.

use serde::Serialize;
use serde_json::{Number, Value};

/// Output layout. `Pretty` puts each object member on its own line but keeps
/// arrays of scalars inline, which is what scene files look like.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Compact,
    Pretty,
}

pub fn format_float(v: f64, decimals: usize) -> String {
    let s = format!("{:.*}", decimals, v);
    // "-0.000" and friends
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn write_number(out: &mut String, n: &Number, decimals: usize) {
    if let Some(i) = n.as_i64() {
        out.push_str(&i.to_string());
    } else if let Some(u) = n.as_u64() {
        out.push_str(&u.to_string());
    } else {
        let f = n.as_f64().unwrap_or(0.0);
        out.push_str(&format_float(f, decimals));
    }
}

fn write_string(out: &mut String, s: &str) {
    out.push_str(&serde_json::to_string(s).expect("string serialization is infallible"));
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Array(_) | Value::Object(_))
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn write(out: &mut String, v: &Value, decimals: usize, layout: Layout, level: usize) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => write_number(out, n, decimals),
        Value::String(s) => write_string(out, s),
        Value::Array(items) => {
            let inline = layout == Layout::Compact || items.iter().all(is_scalar);
            if items.is_empty() {
                out.push_str("[]");
            } else if inline {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(if layout == Layout::Compact { "," } else { ", " });
                    }
                    write(out, item, decimals, layout, level + 1);
                }
                out.push(']');
            } else {
                out.push_str("[\n");
                for (i, item) in items.iter().enumerate() {
                    indent(out, level + 1);
                    write(out, item, decimals, layout, level + 1);
                    if i + 1 < items.len() {
                        out.push(',');
                    }
                    out.push('\n');
                }
                indent(out, level);
                out.push(']');
            }
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            match layout {
                Layout::Compact => {
                    out.push('{');
                    for (i, (k, val)) in map.iter().enumerate() {
                        if i > 0 {
                            out.push(',');
                        }
                        write_string(out, k);
                        out.push(':');
                        write(out, val, decimals, layout, level + 1);
                    }
                    out.push('}');
                }
                Layout::Pretty => {
                    out.push_str("{\n");
                    for (i, (k, val)) in map.iter().enumerate() {
                        indent(out, level + 1);
                        write_string(out, k);
                        out.push_str(": ");
                        write(out, val, decimals, layout, level + 1);
                        if i + 1 < map.len() {
                            out.push(',');
                        }
                        out.push('\n');
                    }
                    indent(out, level);
                    out.push('}');
                }
            }
        }
    }
}

pub fn value_to_string(v: &Value, decimals: usize, layout: Layout) -> String {
    let mut out = String::new();
    write(&mut out, v, decimals, layout, 0);
    out
}

/// Serializes any `Serialize` value through [`value_to_string`].
pub fn to_string<T: Serialize>(
    v: &T,
    decimals: usize,
    layout: Layout,
) -> serde_json::Result<String> {
    Ok(value_to_string(&serde_json::to_value(v)?, decimals, layout))
}

//! Canonical byte encoding.
//!
//! The encoding is a strict JSON subset:
//!
//! * no insignificant whitespace;
//! * object keys sorted by the bytes of their UTF-8 encoding;
//! * integers in decimal, no leading zeros, `-` only for negatives;
//! * `null` for unit;
//! * strings as UTF-8, escaping only `"`, `\` and control characters. The
//!   short forms `\b \t \n \f \r` are used where they exist, every other
//!   control character is written as `\u00xx` with lowercase hex.
//!
//! The same logical value always yields the same bytes.

use crate::value::{Value, ValueMap, MAX_VALUE_NODES};
use thiserror::Error;

/// Maximum nesting depth of lists and maps accepted by the encoder and decoder.
pub const MAX_VALUE_DEPTH: usize = 128;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CanonicalError {
    #[error("value exceeds {MAX_VALUE_NODES} nodes")]
    TooManyNodes,
    #[error("value nests deeper than {MAX_VALUE_DEPTH} levels")]
    TooDeep,
    #[error("invalid canonical input: {0}")]
    Parse(String),
    #[error("floating point numbers are not representable: {0}")]
    Float(String),
    #[error("integer out of 64-bit range: {0}")]
    IntRange(String),
    #[error("{0}")]
    Shape(String),
}

/// Checks the finiteness bounds without recursion.
pub fn check_bounds(v: &Value) -> Result<(), CanonicalError> {
    let mut count = 0usize;
    let mut stack = vec![(v, 0usize)];
    while let Some((v, depth)) = stack.pop() {
        count += 1;
        if count > MAX_VALUE_NODES {
            return Err(CanonicalError::TooManyNodes);
        }
        if depth > MAX_VALUE_DEPTH {
            return Err(CanonicalError::TooDeep);
        }
        match v {
            Value::List(items) => stack.extend(items.iter().map(|c| (c, depth + 1))),
            Value::Map(m) => stack.extend(m.values().map(|c| (c, depth + 1))),
            _ => {}
        }
    }
    Ok(())
}

pub fn canonical_serialize(v: &Value) -> Result<Vec<u8>, CanonicalError> {
    check_bounds(v)?;
    let mut out = Vec::with_capacity(64);
    write_value(v, &mut out);
    Ok(out)
}

pub fn to_canonical_string(v: &Value) -> Result<String, CanonicalError> {
    canonical_serialize(v).map(|b| String::from_utf8(b).expect("canonical output is UTF-8"))
}

pub(crate) fn write_value(v: &Value, out: &mut Vec<u8>) {
    match v {
        Value::Unit => out.extend_from_slice(b"null"),
        Value::Bool(true) => out.extend_from_slice(b"true"),
        Value::Bool(false) => out.extend_from_slice(b"false"),
        Value::Int(n) => out.extend_from_slice(n.to_string().as_bytes()),
        Value::Str(s) => write_string(s, out),
        Value::List(items) => {
            out.push(b'[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(b',');
                }
                write_value(item, out);
            }
            out.push(b']');
        }
        Value::Map(m) => write_map(m, out),
    }
}

fn write_map(m: &ValueMap, out: &mut Vec<u8>) {
    out.push(b'{');
    for (i, (k, v)) in m.iter().enumerate() {
        if i > 0 {
            out.push(b',');
        }
        write_string(k, out);
        out.push(b':');
        write_value(v, out);
    }
    out.push(b'}');
}

fn write_string(s: &str, out: &mut Vec<u8>) {
    const HEX: &[u8; 16] = b"0123456789abcdef";
    out.push(b'"');
    for &b in s.as_bytes() {
        match b {
            b'"' => out.extend_from_slice(b"\\\""),
            b'\\' => out.extend_from_slice(b"\\\\"),
            0x08 => out.extend_from_slice(b"\\b"),
            b'\t' => out.extend_from_slice(b"\\t"),
            b'\n' => out.extend_from_slice(b"\\n"),
            0x0c => out.extend_from_slice(b"\\f"),
            b'\r' => out.extend_from_slice(b"\\r"),
            0x00..=0x1f => {
                out.extend_from_slice(b"\\u00");
                out.push(HEX[(b >> 4) as usize]);
                out.push(HEX[(b & 0xf) as usize]);
            }
            _ => out.push(b),
        }
    }
    out.push(b'"');
}

/// Parses JSON text into a `Value`.
///
/// Accepts any JSON whose numbers are 64-bit integers; canonical form is not
/// required here. Callers that need canonical input compare against
/// [`canonical_serialize`] of the result.
pub fn canonical_deserialize(bytes: &[u8]) -> Result<Value, CanonicalError> {
    let json: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| CanonicalError::Parse(e.to_string()))?;
    let v = from_json(json)?;
    check_bounds(&v)?;
    Ok(v)
}

/// Converts parsed JSON into a `Value`, rejecting floats and out-of-range integers.
pub fn from_json(json: serde_json::Value) -> Result<Value, CanonicalError> {
    Ok(match json {
        serde_json::Value::Null => Value::Unit,
        serde_json::Value::Bool(b) => Value::Bool(b),
        serde_json::Value::Number(n) => match n.as_i64() {
            Some(i) => Value::Int(i),
            None if n.is_u64() => return Err(CanonicalError::IntRange(n.to_string())),
            None => return Err(CanonicalError::Float(n.to_string())),
        },
        serde_json::Value::String(s) => Value::Str(s),
        serde_json::Value::Array(items) => {
            Value::List(items.into_iter().map(from_json).collect::<Result<_, _>>()?)
        }
        serde_json::Value::Object(obj) => Value::Map(
            obj.into_iter()
                .map(|(k, v)| Ok((k, from_json(v)?)))
                .collect::<Result<_, CanonicalError>>()?,
        ),
    })
}

//! Canonical JSON writer, strict JSON readers, and FNV-1a hashing.
//!
//! Canonical form: object keys in ascending byte order, no insignificant
//! whitespace, UTF-8. Persisted reals (`Fixed4`) are written with exactly four
//! decimals; free-form reals use the shortest round-tripping representation.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde_json::{Map, Value};

use crate::error::DecodeError;

pub const FNV_OFFSET_BASIS: u64 = 14_695_981_039_346_656_037;
pub const FNV_PRIME: u64 = 1_099_511_628_211;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET_BASIS, |h, b| {
        (h ^ u64::from(*b)).wrapping_mul(FNV_PRIME)
    })
}

/// A JSON value tree that knows how to write itself canonically.
#[derive(Debug, Clone, PartialEq)]
pub enum Canon {
    Null,
    Bool(bool),
    UInt(u64),
    Fixed4(f64),
    Real(f64),
    Str(String),
    Arr(Vec<Canon>),
    Obj(BTreeMap<String, Canon>),
}

impl Canon {
    pub fn obj<const N: usize>(fields: [(&str, Canon); N]) -> Canon {
        Canon::Obj(fields.into_iter().map(|(k, v)| (k.to_owned(), v)).collect())
    }

    pub fn str(s: impl Into<String>) -> Canon {
        Canon::Str(s.into())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = String::new();
        self.write(&mut out);
        out.into_bytes()
    }

    fn write(&self, out: &mut String) {
        match self {
            Canon::Null => out.push_str("null"),
            Canon::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Canon::UInt(n) => {
                let _ = write!(out, "{n}");
            }
            Canon::Fixed4(v) => write_fixed4(out, *v),
            Canon::Real(v) => {
                if v.is_finite() {
                    // normalise -0.0 so equal values print identically
                    let v = if *v == 0.0 { 0.0 } else { *v };
                    let _ = write!(out, "{v:?}");
                } else {
                    out.push_str("null");
                }
            }
            Canon::Str(s) => write_str(out, s),
            Canon::Arr(items) => {
                out.push('[');
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    it.write(out);
                }
                out.push(']');
            }
            Canon::Obj(fields) => {
                out.push('{');
                for (i, (k, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    write_str(out, k);
                    out.push(':');
                    v.write(out);
                }
                out.push('}');
            }
        }
    }
}

fn write_fixed4(out: &mut String, v: f64) {
    if !v.is_finite() {
        out.push_str("null");
        return;
    }
    let q = (v * 10_000.0).round() / 10_000.0;
    let q = if q == 0.0 { 0.0 } else { q };
    let _ = write!(out, "{q:.4}");
}

fn write_str(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            '\u{08}' => out.push_str("\\b"),
            '\u{0c}' => out.push_str("\\f"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

/// Parses `bytes` as a single JSON value.
pub fn parse(bytes: &[u8]) -> Result<Value, DecodeError> {
    serde_json::from_slice(bytes).map_err(|e| DecodeError::from_json(bytes, &e))
}

/// Field-by-field reader over a JSON object that rejects unknown keys.
pub struct StrictObj {
    ctx: &'static str,
    fields: Map<String, Value>,
}

impl StrictObj {
    pub fn new(ctx: &'static str, v: Value) -> Result<Self, DecodeError> {
        match v {
            Value::Object(fields) => Ok(StrictObj { ctx, fields }),
            _ => Err(DecodeError::schema(format!("{ctx}: expected object"))),
        }
    }

    pub fn take(&mut self, key: &str) -> Result<Value, DecodeError> {
        self.fields
            .remove(key)
            .ok_or_else(|| DecodeError::schema(format!("{}: missing field `{key}`", self.ctx)))
    }

    pub fn take_opt(&mut self, key: &str) -> Option<Value> {
        self.fields.remove(key)
    }

    pub fn u64(&mut self, key: &str) -> Result<u64, DecodeError> {
        let v = self.take(key)?;
        as_u64(&v).ok_or_else(|| self.bad(key, "unsigned integer"))
    }

    pub fn u32(&mut self, key: &str) -> Result<u32, DecodeError> {
        let v = self.take(key)?;
        as_u64(&v)
            .and_then(|n| u32::try_from(n).ok())
            .ok_or_else(|| self.bad(key, "32-bit unsigned integer"))
    }

    pub fn f64(&mut self, key: &str) -> Result<f64, DecodeError> {
        let v = self.take(key)?;
        v.as_f64().ok_or_else(|| self.bad(key, "number"))
    }

    pub fn bool(&mut self, key: &str) -> Result<bool, DecodeError> {
        let v = self.take(key)?;
        v.as_bool().ok_or_else(|| self.bad(key, "boolean"))
    }

    pub fn string(&mut self, key: &str) -> Result<String, DecodeError> {
        match self.take(key)? {
            Value::String(s) => Ok(s),
            _ => Err(self.bad(key, "string")),
        }
    }

    pub fn array(&mut self, key: &str) -> Result<Vec<Value>, DecodeError> {
        match self.take(key)? {
            Value::Array(a) => Ok(a),
            _ => Err(self.bad(key, "array")),
        }
    }

    pub fn bad(&self, key: &str, expected: &str) -> DecodeError {
        DecodeError::schema(format!("{}: field `{key}` must be a {expected}", self.ctx))
    }

    /// Fails if any field was not consumed.
    pub fn finish(self) -> Result<(), DecodeError> {
        match self.fields.keys().next() {
            None => Ok(()),
            Some(k) => Err(DecodeError::schema(format!(
                "{}: unknown field `{k}`",
                self.ctx
            ))),
        }
    }
}

pub fn as_u64(v: &Value) -> Option<u64> {
    v.as_u64()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_vectors() {
        assert_eq!(fnv1a64(b""), 14_695_981_039_346_656_037);
        // published FNV-1a 64 test vectors
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x8594_4171_f739_67e8);
    }

    #[test]
    fn writer_sorts_keys_and_formats_numbers() {
        let v = Canon::obj([
            ("b", Canon::Fixed4(0.01)),
            (
                "a",
                Canon::Arr(vec![Canon::UInt(3), Canon::Real(1.5), Canon::Null]),
            ),
            ("c", Canon::str("q\"\n\u{1}é")),
            ("d", Canon::Fixed4(-0.0)),
        ]);
        assert_eq!(
            String::from_utf8(v.to_bytes()).unwrap(),
            r#"{"a":[3,1.5,null],"b":0.0100,"c":"q\"\n\u0001é","d":0.0000}"#
        );
    }

    #[test]
    fn strict_object_rejects_unknown_fields() {
        let mut o = StrictObj::new("t", parse(br#"{"a":1,"b":2}"#).unwrap()).unwrap();
        assert_eq!(o.u64("a"), Ok(1));
        assert!(o.finish().is_err());
    }

    #[test]
    fn parse_error_has_position() {
        let e = parse(br#"{"a":1,"#).unwrap_err();
        assert!(e.position >= 6, "{e:?}");
    }
}

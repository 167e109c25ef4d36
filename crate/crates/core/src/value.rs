//! Typed column values.
//!
//! A column holds exactly one [`ColumnType`]. Values of a column are totally
//! ordered: numerically for `Integer`, by IEEE-754 total order for `Float`
//! (NaN is rejected on construction), and by UTF-8 byte order for strings.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ColumnType {
    CategoricalString,
    Integer,
    Float,
}

impl ColumnType {
    pub fn is_numeric(self) -> bool {
        !matches!(self, ColumnType::CategoricalString)
    }

    /// Parses the schema-file spelling (`string`, `int`, `float`).
    pub fn from_schema_name(name: &str) -> Option<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "string" | "str" => Some(ColumnType::CategoricalString),
            "int" | "integer" => Some(ColumnType::Integer),
            "float" => Some(ColumnType::Float),
            _ => None,
        }
    }
}

impl fmt::Display for ColumnType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColumnType::CategoricalString => "string",
            ColumnType::Integer => "int",
            ColumnType::Float => "float",
        })
    }
}

/// An original (un-encoded) column value.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Str(String),
    Int(i64),
    Float(f64),
}

impl Value {
    /// Builds a float value, rejecting NaN.
    pub fn float(x: f64) -> Result<Self> {
        if x.is_nan() {
            return Err(Error::TypeMismatch {
                expected: ColumnType::Float,
                found: "NaN".into(),
            });
        }
        Ok(Value::Float(x))
    }

    pub fn str(s: impl Into<String>) -> Self {
        Value::Str(s.into())
    }

    pub fn column_type(&self) -> ColumnType {
        match self {
            Value::Str(_) => ColumnType::CategoricalString,
            Value::Int(_) => ColumnType::Integer,
            Value::Float(_) => ColumnType::Float,
        }
    }

    /// Parses text as a value of type `ty`.
    pub fn parse(text: &str, ty: ColumnType) -> Result<Self> {
        let mismatch = || Error::TypeMismatch {
            expected: ty,
            found: format!("{text:?}"),
        };
        match ty {
            ColumnType::CategoricalString => Ok(Value::Str(text.to_owned())),
            ColumnType::Integer => text.trim().parse().map(Value::Int).map_err(|_| mismatch()),
            ColumnType::Float => {
                let x: f64 = text.trim().parse().map_err(|_| mismatch())?;
                Value::float(x).map_err(|_| mismatch())
            }
        }
    }

    /// Converts `self` to type `ty`. Integers widen to floats; every other
    /// cross-type conversion is a mismatch.
    pub fn coerce(self, ty: ColumnType) -> Result<Self> {
        match (self, ty) {
            (v @ Value::Str(_), ColumnType::CategoricalString)
            | (v @ Value::Int(_), ColumnType::Integer)
            | (v @ Value::Float(_), ColumnType::Float) => Ok(v),
            (Value::Int(i), ColumnType::Float) => Ok(Value::Float(i as f64)),
            (v, ty) => Err(Error::TypeMismatch {
                expected: ty,
                found: v.to_string(),
            }),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Str(_) => None,
            Value::Int(i) => Some(*i as f64),
            Value::Float(x) => Some(*x),
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    /// Size of the value in its textual form, in bytes.
    pub fn text_len(&self) -> usize {
        match self {
            Value::Str(s) => s.len(),
            other => other.to_string().len(),
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Str(_) => 0,
            Value::Int(_) => 1,
            Value::Float(_) => 2,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Str(s) => f.write_str(s),
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{x}"),
        }
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Str(a), Value::Str(b)) => a.as_bytes().cmp(b.as_bytes()),
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Float(a), Value::Float(b)) => a.total_cmp(b),
            (a, b) => a.rank().cmp(&b.rank()),
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        match self {
            Value::Str(s) => s.hash(state),
            Value::Int(i) => i.hash(state),
            Value::Float(x) => x.to_bits().hash(state),
        }
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Str(s.to_owned())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Str(s)
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

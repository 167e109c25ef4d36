//! Schema files and CSV / JSON-lines readers.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use anyhow::{Context, Result};
use augdict::{ColumnType, Schema, Value};
use serde_json::Value as Json;

use crate::error::{parse_error, CliError};

/// Parses `name:type` lines. Blank lines and `#` comments are skipped.
pub fn parse_schema(text: &str) -> Result<Schema, CliError> {
    let mut schema: Schema = Vec::new();
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let n = i as u64 + 1;
        let (name, ty) = line
            .split_once(':')
            .ok_or_else(|| parse_error(n, format!("expected name:type, got {line:?}")))?;
        let (name, ty) = (name.trim(), ty.trim());
        if name.is_empty() {
            return Err(parse_error(n, "empty column name"));
        }
        let ty = ColumnType::from_schema_name(ty)
            .ok_or_else(|| parse_error(n, format!("unknown type {ty:?} (expected string, int or float)")))?;
        if !seen.insert(name.to_owned()) {
            return Err(parse_error(n, format!("duplicate column {name:?}")));
        }
        schema.push((name.to_owned(), ty));
    }
    if schema.is_empty() {
        return Err(CliError::SchemaMismatch("schema declares no columns".into()));
    }
    Ok(schema)
}

pub fn read_schema(path: &Path) -> Result<Schema> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_schema(&text).with_context(|| format!("in schema {}", path.display()))
}

/// Reads a CSV file whose header names exactly the schema's columns, in
/// any order. Rows come back in schema order.
pub fn read_csv(mut input: impl Read, schema: &Schema) -> Result<Vec<Vec<Value>>, CliError> {
    // Line numbers come from byte offsets: the csv crate's own line count
    // drifts on CRLF input. Flexible so short rows reach the length check.
    let mut bytes = Vec::new();
    input
        .read_to_end(&mut bytes)
        .map_err(|e| parse_error(1, e.to_string()))?;
    // A record's offset can point at the previous terminator; skip it.
    let line_of = |byte: u64| {
        let mut at = byte as usize;
        while matches!(bytes.get(at), Some(b'\r' | b'\n')) {
            at += 1;
        }
        1 + bytes[..at].iter().filter(|&&b| b == b'\n').count() as u64
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(&bytes[..]);
    let header = rdr.headers().map_err(|e| csv_error(&e, 1))?.clone();
    if header.is_empty() {
        return Err(CliError::SchemaMismatch("missing header row".into()));
    }
    let names: Vec<&str> = header.iter().collect();
    let mut order = Vec::with_capacity(schema.len());
    for (name, _) in schema {
        let pos = names
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::SchemaMismatch(format!("header lacks column {name:?}")))?;
        order.push(pos);
    }
    if let Some(extra) = names.iter().find(|h| !schema.iter().any(|(n, _)| n == *h)) {
        return Err(CliError::SchemaMismatch(format!(
            "header has unknown column {extra:?}"
        )));
    }
    if names.len() != schema.len() {
        return Err(CliError::SchemaMismatch("header repeats a column".into()));
    }

    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(&e, 0))?;
        let line = rec.position().map_or(0, |p| line_of(p.byte()));
        if rec.len() != names.len() {
            return Err(parse_error(
                line,
                format!("expected {} fields, found {}", names.len(), rec.len()),
            ));
        }
        let row = schema
            .iter()
            .zip(&order)
            .map(|((name, ty), &i)| {
                Value::parse(&rec[i], *ty).map_err(|e| parse_error(line, format!("column {name}: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn csv_error(e: &csv::Error, fallback_line: u64) -> CliError {
    let line = e.position().map_or(fallback_line, |p| p.line());
    parse_error(line, e.to_string())
}

/// Reads one JSON object per line. Blank lines are skipped; keys outside
/// the schema are ignored.
pub fn read_jsonl(input: impl Read, schema: &Schema) -> Result<Vec<Vec<Value>>, CliError> {
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let n = i as u64 + 1;
        let line = line.map_err(|e| parse_error(n, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let obj: serde_json::Map<String, Json> =
            serde_json::from_str(&line).map_err(|e| parse_error(n, e.to_string()))?;
        let row = schema
            .iter()
            .map(|(name, ty)| {
                let v = obj
                    .get(name)
                    .ok_or_else(|| CliError::SchemaMismatch(format!("line {n}: missing key {name:?}")))?;
                json_value(v, *ty)
                    .ok_or_else(|| parse_error(n, format!("column {name}: {v} is not a {ty} value")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn json_value(v: &Json, ty: ColumnType) -> Option<Value> {
    match (ty, v) {
        (ColumnType::CategoricalString, Json::String(s)) => Some(Value::str(s.as_str())),
        (ColumnType::Integer, Json::Number(n)) => n.as_i64().map(Value::Int),
        (ColumnType::Float, Json::Number(n)) => n.as_f64().and_then(|x| Value::float(x).ok()),
        _ => None,
    }
}

pub fn open(path: &Path) -> Result<File> {
    File::open(path).with_context(|| format!("opening {}", path.display()))
}

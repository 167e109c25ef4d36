//! Per-column dictionary encoding with count metadata.
//!
//! Codes are assigned densely in first-occurrence order and never reused.
//! Each entry tracks how many live rows hold its value, so histograms and
//! moment aggregates can be answered from the dictionary alone.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::value::{ColumnType, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DictionaryEntry {
    pub value: Value,
    pub code: u32,
    /// Live rows holding `value`.
    pub count: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dictionary {
    column_type: ColumnType,
    entries: Vec<DictionaryEntry>,
    min: Option<Value>,
    max: Option<Value>,
    total_live_rows: u64,
    #[serde(skip)]
    index: HashMap<Value, u32>,
}

impl Dictionary {
    pub fn new(column_type: ColumnType) -> Self {
        Self {
            column_type,
            entries: Vec::new(),
            min: None,
            max: None,
            total_live_rows: 0,
            index: HashMap::new(),
        }
    }

    /// Builds a dictionary over `values`, one entry per distinct value.
    pub fn build<I>(values: I, column_type: ColumnType) -> Result<Self>
    where
        I: IntoIterator<Item = Value>,
    {
        let mut dict = Self::new(column_type);
        for v in values {
            dict.insert(v)?;
        }
        Ok(dict)
    }

    /// Builds a dictionary from textual values, parsing each as `column_type`.
    pub fn build_from_text<'a, I>(values: I, column_type: ColumnType) -> Result<Self>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut dict = Self::new(column_type);
        for text in values {
            dict.insert(Value::parse(text, column_type)?)?;
        }
        Ok(dict)
    }

    pub fn column_type(&self) -> ColumnType {
        self.column_type
    }

    /// Checks that `value` belongs to this column, widening ints for float
    /// columns.
    pub fn check_value(&self, value: Value) -> Result<Value> {
        let v = value.coerce(self.column_type)?;
        if let Value::Float(x) = v {
            return Value::float(x);
        }
        Ok(v)
    }

    /// Records one live occurrence of `value`. Returns its code and whether a
    /// new entry was appended.
    pub fn insert(&mut self, value: Value) -> Result<(u32, bool)> {
        let value = self.check_value(value)?;
        self.widen_bounds(&value);
        self.total_live_rows += 1;
        if let Some(&code) = self.index.get(&value) {
            self.entries[code as usize].count += 1;
            return Ok((code, false));
        }
        let code = self.push_entry(value)?;
        self.entries[code as usize].count = 1;
        Ok((code, true))
    }

    fn push_entry(&mut self, value: Value) -> Result<u32> {
        let code = u32::try_from(self.entries.len()).map_err(|_| Error::CapacityExceeded(33))?;
        self.index.insert(value.clone(), code);
        self.entries.push(DictionaryEntry {
            value,
            code,
            count: 0,
        });
        Ok(code)
    }

    /// Removes one live occurrence of `code`. The entry is kept even when its
    /// count reaches zero.
    pub(crate) fn remove_live(&mut self, code: u32) {
        let e = &mut self.entries[code as usize];
        debug_assert!(e.count > 0, "count underflow on code {code}");
        e.count -= 1;
        self.total_live_rows -= 1;
    }

    fn widen_bounds(&mut self, value: &Value) {
        match &self.min {
            Some(m) if m <= value => {}
            _ => self.min = Some(value.clone()),
        }
        match &self.max {
            Some(m) if m >= value => {}
            _ => self.max = Some(value.clone()),
        }
    }

    pub fn encode(&self, value: &Value) -> Option<u32> {
        match (value, self.column_type) {
            (Value::Int(i), ColumnType::Float) => self.index.get(&Value::Float(*i as f64)).copied(),
            _ => self.index.get(value).copied(),
        }
    }

    pub fn decode(&self, code: u32) -> Result<&Value> {
        self.entries
            .get(code as usize)
            .map(|e| &e.value)
            .ok_or(Error::CodeOutOfRange {
                code: code.into(),
                len: self.entries.len(),
            })
    }

    pub fn entries(&self) -> &[DictionaryEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, code: u32) -> u64 {
        self.entries.get(code as usize).map_or(0, |e| e.count)
    }

    /// Column minimum over every value ever inserted. Sound for live rows,
    /// not tightened by deletes.
    pub fn min(&self) -> Option<&Value> {
        self.min.as_ref()
    }

    pub fn max(&self) -> Option<&Value> {
        self.max.as_ref()
    }

    pub fn total_live_rows(&self) -> u64 {
        self.total_live_rows
    }

    /// Entries with at least one live row.
    pub fn live_entries(&self) -> impl Iterator<Item = &DictionaryEntry> {
        self.entries.iter().filter(|e| e.count > 0)
    }

    /// Restores the value index after deserialization.
    pub fn rebuild_index(&mut self) {
        self.index = self.entries.iter().map(|e| (e.value.clone(), e.code)).collect();
    }

    /// Approximate in-memory footprint: value bytes plus a 4-byte code and an
    /// 8-byte count per entry.
    pub fn byte_size(&self) -> usize {
        self.entries
            .iter()
            .map(|e| match &e.value {
                Value::Str(s) => s.len(),
                _ => 8,
            } + 12)
            .sum()
    }

    pub fn aggregate(&self, kind: AggregateKind) -> Result<Aggregate> {
        aggregate_from_counts(self, kind)
    }
}

/// Result of [`packed_bit_width`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BitWidth {
    /// Bits per packed code: `max(1, ceil(log2(cardinality)))`.
    pub bits: u32,
    /// Exact `log2(cardinality)`.
    pub theoretical_bits: f64,
}

impl BitWidth {
    /// Theoretical width rounded to one decimal, as printed in reports.
    pub fn theoretical_display(&self) -> String {
        format!("{:.1}", self.theoretical_bits)
    }
}

pub fn packed_bit_width(cardinality: u64) -> Result<BitWidth> {
    if cardinality == 0 {
        return Err(Error::InvalidCardinality);
    }
    Ok(BitWidth {
        bits: bits_for(cardinality),
        theoretical_bits: (cardinality as f64).log2(),
    })
}

/// Bits needed to address `cardinality` distinct codes, at least 1.
pub(crate) fn bits_for(cardinality: u64) -> u32 {
    if cardinality <= 2 {
        1
    } else {
        u64::BITS - (cardinality - 1).leading_zeros()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregateKind {
    Sum,
    Mean,
    StdDev,
    Histogram,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Aggregate {
    Scalar(f64),
    /// `(value, live count)` in code order, count-0 entries omitted.
    Histogram(Vec<(Value, u64)>),
}

impl Aggregate {
    pub fn scalar(&self) -> Option<f64> {
        match self {
            Aggregate::Scalar(x) => Some(*x),
            Aggregate::Histogram(_) => None,
        }
    }
}

/// Computes an aggregate strictly from dictionary entries and their counts.
pub fn aggregate_from_counts(dict: &Dictionary, kind: AggregateKind) -> Result<Aggregate> {
    if kind == AggregateKind::Histogram {
        return Ok(Aggregate::Histogram(
            dict.live_entries().map(|e| (e.value.clone(), e.count)).collect(),
        ));
    }
    if !dict.column_type.is_numeric() {
        return Err(Error::NonNumericColumn(dict.column_type.to_string()));
    }
    let sum = weighted_sum(dict, |x| x);
    if kind == AggregateKind::Sum {
        return Ok(Aggregate::Scalar(sum));
    }
    let n = dict.total_live_rows;
    if n == 0 {
        return Err(Error::EmptyColumn);
    }
    let mean = sum / n as f64;
    if kind == AggregateKind::Mean {
        return Ok(Aggregate::Scalar(mean));
    }
    let var = weighted_sum(dict, |x| (x - mean) * (x - mean)) / n as f64;
    Ok(Aggregate::Scalar(var.sqrt()))
}

fn weighted_sum(dict: &Dictionary, f: impl Fn(f64) -> f64) -> f64 {
    dict.live_entries()
        .map(|e| e.count as f64 * f(e.value.as_f64().unwrap_or(0.0)))
        .sum()
}

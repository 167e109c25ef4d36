//! Column tables: a global dictionary per column plus a chunked list of IMCUs.
//!
//! Row ids are physical positions and stay stable until [`ColumnTable::compact`].
//! Every column shares the same IMCU boundaries, so IMCU `i` of each column
//! covers the same rows.

use std::collections::HashSet;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use super::imcu::{Imcu, IMCU_ROWS};
use super::predicate::Predicate;
use crate::adv::Adv;
use crate::dictionary::{aggregate_from_counts, packed_bit_width, Aggregate, AggregateKind, Dictionary};
use crate::error::{Error, Result};
use crate::par::{map_range, Execution};
use crate::value::{ColumnType, Value};

pub type Schema = Vec<(String, ColumnType)>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Column {
    pub(crate) name: String,
    pub(crate) dict: Dictionary,
    pub(crate) imcus: Vec<Imcu>,
    pub(crate) advs: Vec<Adv>,
}

impl Column {
    fn new(name: String, ty: ColumnType) -> Self {
        Self {
            name,
            dict: Dictionary::new(ty),
            imcus: Vec::new(),
            advs: Vec::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn column_type(&self) -> ColumnType {
        self.dict.column_type()
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dict
    }

    pub fn imcus(&self) -> &[Imcu] {
        &self.imcus
    }

    pub fn advs(&self) -> &[Adv] {
        &self.advs
    }

    pub fn adv(&self, name: &str) -> Option<&Adv> {
        self.advs.iter().find(|a| a.name() == name)
    }
}

/// Counts IMCUs whose code storage was read.
#[derive(Debug, Default)]
pub struct ReadCounter(AtomicU64);

impl ReadCounter {
    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }

    fn add(&self, n: u64) {
        self.0.fetch_add(n, Ordering::Relaxed);
    }

    fn reset(&self) {
        self.0.store(0, Ordering::Relaxed);
    }
}

impl Clone for ReadCounter {
    fn clone(&self) -> Self {
        Self(AtomicU64::new(self.get()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScanOptions {
    /// Skip IMCUs whose zone maps rule out a match.
    pub pruning: bool,
    pub execution: Execution,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            pruning: true,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ScanStats {
    pub imcus_total: usize,
    pub imcus_scanned: usize,
    /// Skipped without a read, by zone map or dictionary short circuit.
    pub imcus_pruned: usize,
    /// The dictionary proved the predicate unsatisfiable before any IMCU read.
    pub short_circuit: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanResult {
    /// Matching live row ids, ascending.
    pub rows: Vec<u64>,
    pub stats: ScanStats,
}

#[derive(Debug, Clone)]
enum ZoneTest {
    Values(Vec<Value>),
    Range(Value, Value),
}

#[derive(Debug, Clone)]
struct Conjunct {
    column: usize,
    /// Membership by global code.
    matcher: Vec<bool>,
    zone: ZoneTest,
}

impl Conjunct {
    fn may_match(&self, imcu: &Imcu) -> bool {
        let z = imcu.zone_map();
        match &self.zone {
            ZoneTest::Values(vs) => vs.iter().any(|v| z.may_contain(v)),
            ZoneTest::Range(lo, hi) => z.may_overlap(lo, hi),
        }
    }
}

/// Per-column storage summary.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnStorage {
    pub name: String,
    pub column_type: ColumnType,
    pub cardinality: usize,
    pub packed_bits: u32,
    pub theoretical_bits: f64,
    pub dictionary_bytes: usize,
    pub code_bytes: usize,
    /// Live values in text form.
    pub raw_bytes: usize,
}

impl ColumnStorage {
    pub fn compressed_bytes(&self) -> usize {
        self.dictionary_bytes + self.code_bytes
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnTable {
    schema: Schema,
    columns: Vec<Column>,
    imcu_rows: usize,
    n_rows: u64,
    n_live: u64,
    #[serde(skip)]
    reads: ReadCounter,
}

impl ColumnTable {
    pub fn new(schema: Schema) -> Result<Self> {
        Self::with_imcu_rows(schema, IMCU_ROWS)
    }

    /// A table whose IMCUs hold at most `imcu_rows` rows.
    pub fn with_imcu_rows(schema: Schema, imcu_rows: usize) -> Result<Self> {
        if schema.is_empty() {
            return Err(Error::InvalidParameter("schema has no columns".into()));
        }
        if !(1..=IMCU_ROWS).contains(&imcu_rows) {
            return Err(Error::InvalidParameter(format!(
                "IMCU size must be in 1..={IMCU_ROWS}, got {imcu_rows}"
            )));
        }
        let mut seen = HashSet::new();
        if let Some((dup, _)) = schema.iter().find(|(n, _)| !seen.insert(n.as_str())) {
            return Err(Error::InvalidParameter(format!("duplicate column {dup}")));
        }
        let columns = schema.iter().map(|(n, t)| Column::new(n.clone(), *t)).collect();
        Ok(Self {
            schema,
            columns,
            imcu_rows,
            n_rows: 0,
            n_live: 0,
            reads: ReadCounter::default(),
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn imcu_rows(&self) -> usize {
        self.imcu_rows
    }

    /// Physical rows, including tombstoned ones.
    pub fn row_count(&self) -> u64 {
        self.n_rows
    }

    pub fn live_row_count(&self) -> u64 {
        self.n_live
    }

    pub fn imcu_count(&self) -> usize {
        self.columns[0].imcus.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_owned()))
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        Ok(&self.columns[self.column_index(name)?])
    }

    pub(crate) fn column_mut(&mut self, name: &str) -> Result<&mut Column> {
        let i = self.column_index(name)?;
        Ok(&mut self.columns[i])
    }

    pub fn dictionary(&self, column: &str) -> Result<&Dictionary> {
        Ok(&self.column(column)?.dict)
    }

    /// Total IMCU code reads since creation (or the last reset).
    pub fn imcu_reads(&self) -> u64 {
        self.reads.get()
    }

    pub fn reset_imcu_reads(&self) {
        self.reads.reset();
    }

    pub(crate) fn count_reads(&self, n: usize) {
        self.reads.add(n as u64);
    }

    /// Answers an aggregate from the column dictionary without reading IMCUs.
    pub fn aggregate(&self, column: &str, kind: AggregateKind) -> Result<Aggregate> {
        aggregate_from_counts(self.dictionary(column)?, kind)
    }

    /// Appends rows given in schema order. Either every row is appended or
    /// none is.
    pub fn append_rows(&mut self, rows: Vec<Vec<Value>>) -> Result<usize> {
        if rows.is_empty() {
            return Ok(0);
        }
        let width = self.schema.len();
        let mut typed: Vec<Vec<Value>> = (0..width).map(|_| Vec::with_capacity(rows.len())).collect();
        for row in rows {
            if row.len() != width {
                return Err(Error::InvalidParameter(format!(
                    "row has {} values, schema has {width} columns",
                    row.len()
                )));
            }
            for (c, v) in row.into_iter().enumerate() {
                typed[c].push(self.columns[c].dict.check_value(v)?);
            }
        }

        // New dictionary entries and their ADV slots are computed up front so
        // a failing kernel leaves the table untouched.
        let mut new_slots = Vec::with_capacity(width);
        for (col, values) in self.columns.iter().zip(&typed) {
            let mut fresh: Vec<&Value> = Vec::new();
            let mut seen = HashSet::new();
            for v in values {
                if col.dict.encode(v).is_none() && seen.insert(v) {
                    fresh.push(v);
                }
            }
            let next = col.dict.len();
            if next + fresh.len() > u32::MAX as usize + 1 {
                return Err(Error::CapacityExceeded(33));
            }
            let mut per_adv = Vec::with_capacity(col.advs.len());
            for adv in &col.advs {
                let slots = fresh
                    .iter()
                    .enumerate()
                    .map(|(j, v)| adv.compute_slot(v, (next + j) as u32))
                    .collect::<Result<Vec<_>>>()?;
                per_adv.push(slots);
            }
            new_slots.push(per_adv);
        }

        let n = typed[0].len();
        for (col, (values, per_adv)) in self.columns.iter_mut().zip(typed.into_iter().zip(new_slots)) {
            for (row, v) in (self.n_rows..).zip(values) {
                let (code, _) = col.dict.insert(v.clone())?;
                if col.imcus.last().is_none_or(|i| i.len() >= self.imcu_rows) {
                    col.imcus.push(Imcu::new(row));
                }
                let dict_len = col.dict.len();
                let imcu = col.imcus.last_mut().expect("an open IMCU exists");
                imcu.push(code, &v, dict_len)?;
                if imcu.len() == self.imcu_rows {
                    imcu.optimize()?;
                }
            }
            for (adv, slots) in col.advs.iter_mut().zip(per_adv) {
                for s in slots {
                    adv.push_slot(&s);
                }
                adv.mark_stale();
            }
        }
        self.n_rows += n as u64;
        self.n_live += n as u64;
        Ok(n)
    }

    fn locate(&self, row: u64) -> (usize, usize) {
        let r = self.imcu_rows as u64;
        ((row / r) as usize, (row % r) as usize)
    }

    pub fn is_live(&self, row: u64) -> bool {
        if row >= self.n_rows {
            return false;
        }
        let (i, off) = self.locate(row);
        self.columns[0].imcus[i].is_live(off)
    }

    /// Tombstones the given rows; dead or out-of-range ids are ignored.
    /// Returns the number of rows deleted.
    pub fn delete_rows(&mut self, rows: &[u64]) -> u64 {
        let mut deleted = 0;
        for &row in rows {
            if !self.is_live(row) {
                continue;
            }
            let (i, off) = self.locate(row);
            for col in &mut self.columns {
                let imcu = &mut col.imcus[i];
                let code = imcu.code_at(off).expect("row within IMCU");
                imcu.kill(off);
                col.dict.remove_live(code);
            }
            deleted += 1;
        }
        if deleted > 0 {
            self.n_live -= deleted;
            for col in &mut self.columns {
                col.advs.iter_mut().for_each(Adv::mark_stale);
            }
        }
        deleted
    }

    pub fn delete_where(&mut self, predicate: &Predicate) -> Result<u64> {
        let rows = self.scan(predicate)?.rows;
        Ok(self.delete_rows(&rows))
    }

    /// Replaces matching rows by deleting them and appending `f(row)`.
    /// Returns the number of rows rewritten.
    pub fn update_where<F>(&mut self, predicate: &Predicate, f: F) -> Result<u64>
    where
        F: Fn(&mut Vec<Value>),
    {
        let ids = self.scan(predicate)?.rows;
        let mut rows = ids.iter().map(|&r| self.row(r)).collect::<Result<Vec<_>>>()?;
        rows.iter_mut().for_each(&f);
        let mut staged = self.clone();
        staged.append_rows(rows)?;
        staged.delete_rows(&ids);
        *self = staged;
        Ok(ids.len() as u64)
    }

    /// Decodes one live row.
    pub fn row(&self, row: u64) -> Result<Vec<Value>> {
        if !self.is_live(row) {
            return Err(Error::DeadRow(row));
        }
        let (i, off) = self.locate(row);
        self.columns
            .iter()
            .map(|c| {
                let code = c.imcus[i].code_at(off).expect("row within IMCU");
                c.dict.decode(code).cloned()
            })
            .collect()
    }

    /// Every live row as `(row id, values)`, ascending.
    pub fn live_rows(&self) -> Vec<(u64, Vec<Value>)> {
        (0..self.n_rows)
            .filter(|r| self.is_live(*r))
            .map(|r| (r, self.row(r).expect("live row decodes")))
            .collect()
    }

    fn bind(&self, predicate: &Predicate) -> Result<Option<Vec<Conjunct>>> {
        let mut out = Vec::new();
        for leaf in predicate.leaves() {
            let (name, zone) = match leaf {
                Predicate::Eq(c, v) => (c, ZoneTest::Values(vec![v.clone()])),
                Predicate::InList(c, vs) => (c, ZoneTest::Values(vs.clone())),
                Predicate::Range(c, lo, hi) => (c, ZoneTest::Range(lo.clone(), hi.clone())),
                Predicate::And(_) => unreachable!("leaves are flattened"),
            };
            let column = self.column_index(name)?;
            let dict = &self.columns[column].dict;
            let ty = dict.column_type();
            let mut matcher = vec![false; dict.len()];
            let zone = match zone {
                ZoneTest::Values(vs) => {
                    let vs = vs
                        .into_iter()
                        .map(|v| dict.check_value(v))
                        .collect::<Result<Vec<_>>>()?;
                    let present: Vec<Value> = vs
                        .into_iter()
                        .filter(|v| match dict.encode(v) {
                            Some(code) => {
                                matcher[code as usize] = true;
                                true
                            }
                            None => false,
                        })
                        .collect();
                    if present.is_empty() {
                        return Ok(None);
                    }
                    ZoneTest::Values(present)
                }
                ZoneTest::Range(lo, hi) => {
                    let lo = lo.coerce(ty)?;
                    let hi = hi.coerce(ty)?;
                    let mut any = false;
                    for e in dict.entries() {
                        if lo <= e.value && e.value <= hi {
                            matcher[e.code as usize] = true;
                            any = true;
                        }
                    }
                    if !any {
                        return Ok(None);
                    }
                    ZoneTest::Range(lo, hi)
                }
            };
            out.push(Conjunct {
                column,
                matcher,
                zone,
            });
        }
        Ok(Some(out))
    }

    pub fn scan(&self, predicate: &Predicate) -> Result<ScanResult> {
        self.scan_with(predicate, ScanOptions::default())
    }

    pub fn scan_with(&self, predicate: &Predicate, opts: ScanOptions) -> Result<ScanResult> {
        let n = self.imcu_count();
        let Some(conjuncts) = self.bind(predicate)? else {
            return Ok(ScanResult {
                rows: Vec::new(),
                stats: ScanStats {
                    imcus_total: n,
                    imcus_pruned: n,
                    short_circuit: true,
                    ..Default::default()
                },
            });
        };
        let per_imcu = map_range(n, opts.execution, |i| {
            let pruned = opts.pruning
                && conjuncts
                    .iter()
                    .any(|c| !c.may_match(&self.columns[c.column].imcus[i]));
            if pruned {
                return None;
            }
            let base = &self.columns[0].imcus[i];
            let mut sel = base.liveness().to_vec();
            for c in &conjuncts {
                self.columns[c.column].imcus[i].refine(&c.matcher, &mut sel);
            }
            let row_base = base.row_base();
            Some(
                sel.iter()
                    .enumerate()
                    .filter(|(_, s)| **s)
                    .map(|(off, _)| row_base + off as u64)
                    .collect::<Vec<u64>>(),
            )
        });
        let mut stats = ScanStats {
            imcus_total: n,
            ..Default::default()
        };
        let mut rows = Vec::new();
        for r in per_imcu {
            match r {
                Some(ids) => {
                    stats.imcus_scanned += 1;
                    rows.extend(ids);
                }
                None => stats.imcus_pruned += 1,
            }
        }
        let distinct_cols: HashSet<usize> = conjuncts.iter().map(|c| c.column).collect();
        self.count_reads(stats.imcus_scanned * distinct_cols.len().max(1));
        Ok(ScanResult { rows, stats })
    }

    /// Global codes of `column` at `rows`, in ascending row order.
    pub fn gather_codes(&self, column: &str, rows: &[u64]) -> Result<Vec<u32>> {
        self.gather_codes_with(column, rows, Execution::default())
    }

    pub fn gather_codes_with(&self, column: &str, rows: &[u64], exec: Execution) -> Result<Vec<u32>> {
        let col = self.column(column)?;
        let mut rows = rows.to_vec();
        if !rows.is_sorted() {
            rows.sort_unstable();
        }
        rows.dedup();
        if let Some(&dead) = rows.iter().find(|r| !self.is_live(**r)) {
            return Err(Error::DeadRow(dead));
        }
        let groups = self.group_by_imcu(&rows);
        let parts = map_range(groups.len(), exec, |g| {
            let (imcu, range) = &groups[g];
            let codes = col.imcus[*imcu].codes();
            rows[range.clone()]
                .iter()
                .map(|&r| codes[self.locate(r).1])
                .collect::<Vec<u32>>()
        });
        self.count_reads(groups.len());
        Ok(parts.concat())
    }

    /// Splits sorted `rows` into `(imcu index, index range into rows)` groups.
    pub(crate) fn group_by_imcu(&self, rows: &[u64]) -> Vec<(usize, std::ops::Range<usize>)> {
        let mut groups: Vec<(usize, std::ops::Range<usize>)> = Vec::new();
        for (k, &r) in rows.iter().enumerate() {
            let i = self.locate(r).0;
            match groups.last_mut() {
                Some((last, range)) if *last == i => range.end = k + 1,
                _ => groups.push((i, k..k + 1)),
            }
        }
        groups
    }

    /// Re-encodes every IMCU with whichever of bit-packing and RLE is smaller.
    pub fn optimize_encoding(&mut self) -> Result<()> {
        for col in &mut self.columns {
            for imcu in &mut col.imcus {
                imcu.optimize()?;
            }
        }
        Ok(())
    }

    pub fn storage_report(&self) -> Vec<ColumnStorage> {
        self.columns
            .iter()
            .map(|c| {
                let card = c.dict.len();
                let width = packed_bit_width(card.max(1) as u64).expect("nonzero cardinality");
                ColumnStorage {
                    name: c.name.clone(),
                    column_type: c.column_type(),
                    cardinality: card,
                    packed_bits: width.bits,
                    theoretical_bits: width.theoretical_bits,
                    dictionary_bytes: c.dict.byte_size(),
                    code_bytes: c.imcus.iter().map(Imcu::byte_len).sum(),
                    raw_bytes: c
                        .dict
                        .live_entries()
                        .map(|e| e.count as usize * e.value.text_len())
                        .sum(),
                }
            })
            .collect()
    }

    /// Rebuilds the table from its live rows: drops tombstones and count-0
    /// dictionary entries, tightens zone maps, and renumbers codes. ADVs keep
    /// their outputs. Row ids are renumbered densely.
    pub fn compact(&mut self) -> Result<()> {
        let rows: Vec<Vec<Value>> = self.live_rows().into_iter().map(|(_, r)| r).collect();
        let mut fresh = Self::with_imcu_rows(self.schema.clone(), self.imcu_rows)?;
        fresh.append_rows(rows)?;
        fresh.optimize_encoding()?;
        for (old, new) in self.columns.iter().zip(fresh.columns.iter_mut()) {
            let order: Vec<u32> = new
                .dict
                .entries()
                .iter()
                .map(|e| {
                    old.dict
                        .encode(&e.value)
                        .expect("live value is in old dictionary")
                })
                .collect();
            new.advs = old
                .advs
                .iter()
                .map(|a| a.reindexed(&order, &new.dict))
                .collect::<Result<_>>()?;
        }
        *self = fresh;
        Ok(())
    }

    /// Restores indexes that are not serialized.
    pub fn rebuild_indexes(&mut self) {
        for col in &mut self.columns {
            col.dict.rebuild_index();
            col.imcus.iter_mut().for_each(Imcu::rebuild_index);
            col.advs.iter_mut().for_each(Adv::rebuild_index);
        }
    }
}

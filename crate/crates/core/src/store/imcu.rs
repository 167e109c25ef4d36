//! In-Memory Compression Units: one chunk of one column's codes.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::bitpack::PackedVector;
use super::rle::RleVector;
use crate::dictionary::bits_for;
use crate::error::Result;
use crate::value::Value;

/// Default rows per IMCU (2^19).
pub const IMCU_ROWS: usize = 524_288;

/// Widest code an IMCU stores; wider global dictionaries switch the IMCU to
/// a local code remap.
pub const MAX_IMCU_BIT_WIDTH: u32 = 19;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum CodeStorage {
    Packed(PackedVector),
    Rle(RleVector),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    Packed,
    Rle,
}

impl CodeStorage {
    fn len(&self) -> usize {
        match self {
            CodeStorage::Packed(p) => p.len(),
            CodeStorage::Rle(r) => r.len(),
        }
    }

    fn codes(&self) -> Vec<u32> {
        match self {
            CodeStorage::Packed(p) => p.unpack(),
            CodeStorage::Rle(r) => r.decode(),
        }
    }
}

/// Local code space for one IMCU, used when the column dictionary is wider
/// than [`MAX_IMCU_BIT_WIDTH`] bits.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LocalRemap {
    local_to_global: Vec<u32>,
    #[serde(skip)]
    global_to_local: HashMap<u32, u32>,
}

impl LocalRemap {
    fn local_code(&mut self, global: u32) -> u32 {
        if let Some(&l) = self.global_to_local.get(&global) {
            return l;
        }
        let l = self.local_to_global.len() as u32;
        self.local_to_global.push(global);
        self.global_to_local.insert(global, l);
        l
    }

    pub fn len(&self) -> usize {
        self.local_to_global.len()
    }

    pub fn is_empty(&self) -> bool {
        self.local_to_global.is_empty()
    }

    pub fn global(&self, local: u32) -> u32 {
        self.local_to_global[local as usize]
    }
}

/// Min/max of the values written to an IMCU. Widened on insert, never
/// narrowed on delete, so it stays sound for live rows.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ZoneMap {
    pub min: Option<Value>,
    pub max: Option<Value>,
}

impl ZoneMap {
    pub fn widen(&mut self, v: &Value) {
        if self.min.as_ref().is_none_or(|m| v < m) {
            self.min = Some(v.clone());
        }
        if self.max.as_ref().is_none_or(|m| v > m) {
            self.max = Some(v.clone());
        }
    }

    pub fn may_contain(&self, v: &Value) -> bool {
        self.may_overlap(v, v)
    }

    /// Whether any value in `[lo, hi]` may be present.
    pub fn may_overlap(&self, lo: &Value, hi: &Value) -> bool {
        match (&self.min, &self.max) {
            (Some(min), Some(max)) => lo <= max && hi >= min,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Imcu {
    row_base: u64,
    bit_width: u32,
    storage: CodeStorage,
    remap: Option<LocalRemap>,
    zone_map: ZoneMap,
    live: Vec<bool>,
    n_live: usize,
}

impl Imcu {
    pub fn new(row_base: u64) -> Self {
        Self {
            row_base,
            bit_width: 1,
            storage: CodeStorage::Packed(PackedVector::new(1).expect("1 bit is valid")),
            remap: None,
            zone_map: ZoneMap::default(),
            live: Vec::new(),
            n_live: 0,
        }
    }

    pub fn row_base(&self) -> u64 {
        self.row_base
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn live_count(&self) -> usize {
        self.n_live
    }

    pub fn bit_width(&self) -> u32 {
        self.bit_width
    }

    pub fn zone_map(&self) -> &ZoneMap {
        &self.zone_map
    }

    pub fn remap(&self) -> Option<&LocalRemap> {
        self.remap.as_ref()
    }

    pub fn encoding(&self) -> Encoding {
        match self.storage {
            CodeStorage::Packed(_) => Encoding::Packed,
            CodeStorage::Rle(_) => Encoding::Rle,
        }
    }

    pub fn storage(&self) -> &CodeStorage {
        &self.storage
    }

    /// Appends one row holding global code `code` for `value`, where
    /// `dict_len` is the column dictionary size after the insert.
    pub fn push(&mut self, code: u32, value: &Value, dict_len: usize) -> Result<()> {
        if self.remap.is_none() && bits_for(dict_len as u64) > MAX_IMCU_BIT_WIDTH {
            self.localize();
        }
        let (stored, width) = match &mut self.remap {
            Some(remap) => {
                let l = remap.local_code(code);
                (l, bits_for(remap.len() as u64))
            }
            None => (code, bits_for(dict_len as u64)),
        };
        if width > self.bit_width {
            self.bit_width = width;
            if let CodeStorage::Packed(p) = &mut self.storage {
                p.widen(width)?;
            }
        }
        match &mut self.storage {
            CodeStorage::Packed(p) => p.push(stored)?,
            CodeStorage::Rle(r) => r.push(stored),
        }
        self.zone_map.widen(value);
        self.live.push(true);
        self.n_live += 1;
        Ok(())
    }

    /// Switches to a local code space.
    fn localize(&mut self) {
        let mut remap = LocalRemap::default();
        let local: Vec<u32> = self
            .storage
            .codes()
            .into_iter()
            .map(|g| remap.local_code(g))
            .collect();
        self.bit_width = bits_for(remap.len().max(1) as u64);
        self.storage = match self.storage {
            CodeStorage::Packed(_) => {
                CodeStorage::Packed(PackedVector::pack(&local, self.bit_width).expect("local codes fit"))
            }
            CodeStorage::Rle(_) => CodeStorage::Rle(RleVector::encode(local)),
        };
        self.remap = Some(remap);
    }

    /// Stored (possibly local) codes in row order.
    pub fn stored_codes(&self) -> Vec<u32> {
        self.storage.codes()
    }

    /// Global dictionary codes in row order, dead rows included.
    pub fn codes(&self) -> Vec<u32> {
        let mut codes = self.storage.codes();
        if let Some(remap) = &self.remap {
            codes.iter_mut().for_each(|c| *c = remap.global(*c));
        }
        codes
    }

    pub fn code_at(&self, offset: usize) -> Option<u32> {
        let stored = match &self.storage {
            CodeStorage::Packed(p) => p.get(offset),
            CodeStorage::Rle(r) => r.get(offset),
        }?;
        Some(match &self.remap {
            Some(remap) => remap.global(stored),
            None => stored,
        })
    }

    pub fn is_live(&self, offset: usize) -> bool {
        self.live.get(offset).copied().unwrap_or(false)
    }

    pub fn liveness(&self) -> &[bool] {
        &self.live
    }

    /// Tombstones a row. Returns false if it was already dead.
    pub(crate) fn kill(&mut self, offset: usize) -> bool {
        match self.live.get_mut(offset) {
            Some(l) if *l => {
                *l = false;
                self.n_live -= 1;
                true
            }
            _ => false,
        }
    }

    /// Translates a per-global-code membership table into this IMCU's stored
    /// code space.
    pub(crate) fn local_matcher(&self, global: &[bool]) -> Option<Vec<bool>> {
        self.remap.as_ref().map(|remap| {
            remap
                .local_to_global
                .iter()
                .map(|&g| global.get(g as usize).copied().unwrap_or(false))
                .collect()
        })
    }

    /// ANDs `selection` with membership of each row's code in `matcher`
    /// (indexed by global code).
    pub(crate) fn refine(&self, matcher: &[bool], selection: &mut [bool]) {
        let local = self.local_matcher(matcher);
        let m = local.as_deref().unwrap_or(matcher);
        let hit = |c: u32| m.get(c as usize).copied().unwrap_or(false);
        match &self.storage {
            CodeStorage::Packed(p) => {
                for (sel, c) in selection.iter_mut().zip(p.iter()) {
                    *sel = *sel && hit(c);
                }
            }
            CodeStorage::Rle(r) => {
                let mut start = 0usize;
                for &(c, n) in r.runs() {
                    let end = start + n as usize;
                    if !hit(c) {
                        selection[start..end].fill(false);
                    }
                    start = end;
                }
            }
        }
    }

    pub fn packed_byte_len(&self) -> usize {
        (self.len() * self.bit_width as usize).div_ceil(8)
    }

    pub fn rle_byte_len(&self) -> usize {
        match &self.storage {
            CodeStorage::Rle(r) => r.byte_len(),
            CodeStorage::Packed(p) => RleVector::from_packed(p).byte_len(),
        }
    }

    /// Bytes used by the current code storage (excluding the liveness bitmap).
    pub fn byte_len(&self) -> usize {
        let remap = self.remap.as_ref().map_or(0, |r| r.len() * 4);
        remap
            + match &self.storage {
                CodeStorage::Packed(p) => p.byte_len(),
                CodeStorage::Rle(r) => r.byte_len(),
            }
    }

    /// Re-encodes the codes as `encoding`.
    pub fn set_encoding(&mut self, encoding: Encoding) -> Result<()> {
        if encoding == self.encoding() {
            return Ok(());
        }
        let codes = self.storage.codes();
        self.storage = match encoding {
            Encoding::Packed => CodeStorage::Packed(PackedVector::pack(&codes, self.bit_width)?),
            Encoding::Rle => CodeStorage::Rle(RleVector::encode(codes)),
        };
        Ok(())
    }

    /// Picks whichever of bit-packing and RLE is smaller.
    pub fn optimize(&mut self) -> Result<()> {
        let enc = if self.rle_byte_len() < self.packed_byte_len() {
            Encoding::Rle
        } else {
            Encoding::Packed
        };
        self.set_encoding(enc)
    }

    pub(crate) fn rebuild_index(&mut self) {
        if let Some(remap) = &mut self.remap {
            remap.global_to_local = remap
                .local_to_global
                .iter()
                .enumerate()
                .map(|(l, &g)| (g, l as u32))
                .collect();
        }
    }
}

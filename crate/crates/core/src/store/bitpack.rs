//! Fixed-width bit packing of dictionary codes.
//!
//! Code `i` occupies bits `[i * w, (i + 1) * w)` of a little-endian bit
//! stream, stored in `u64` words with the least significant bit first.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_BIT_WIDTH: u32 = 32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackedVector {
    bit_width: u32,
    len: usize,
    words: Vec<u64>,
}

impl PackedVector {
    pub fn new(bit_width: u32) -> Result<Self> {
        check_width(bit_width)?;
        Ok(Self {
            bit_width,
            len: 0,
            words: Vec::new(),
        })
    }

    pub fn pack(codes: &[u32], bit_width: u32) -> Result<Self> {
        let mut v = Self::new(bit_width)?;
        v.words.reserve(words_for(codes.len(), bit_width));
        for &c in codes {
            v.push(c)?;
        }
        Ok(v)
    }

    /// Packs `codes` at the narrowest width that holds the largest code.
    pub fn pack_min_width(codes: &[u32]) -> Self {
        let max = codes.iter().copied().max().unwrap_or(0);
        let width = (u32::BITS - max.leading_zeros()).max(1);
        Self::pack(codes, width).expect("width fits every code")
    }

    pub fn bit_width(&self) -> u32 {
        self.bit_width
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, code: u32) -> Result<()> {
        let w = self.bit_width;
        if w < 32 && code >> w != 0 {
            return Err(Error::InvalidParameter(format!(
                "code {code} does not fit in {w} bits"
            )));
        }
        let bit = self.len * w as usize;
        let (word, shift) = (bit / 64, bit % 64);
        if word >= self.words.len() {
            self.words.push(0);
        }
        self.words[word] |= (code as u64) << shift;
        if shift + w as usize > 64 {
            self.words.push((code as u64) >> (64 - shift));
        }
        self.len += 1;
        Ok(())
    }

    pub fn get(&self, index: usize) -> Option<u32> {
        (index < self.len).then(|| self.get_unchecked(index))
    }

    fn get_unchecked(&self, index: usize) -> u32 {
        let w = self.bit_width as usize;
        let bit = index * w;
        let (word, shift) = (bit / 64, bit % 64);
        let mut v = self.words[word] >> shift;
        if shift + w > 64 {
            v |= self.words[word + 1] << (64 - shift);
        }
        (v & mask(self.bit_width)) as u32
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.len).map(move |i| self.get_unchecked(i))
    }

    pub fn unpack(&self) -> Vec<u32> {
        self.iter().collect()
    }

    /// Re-encodes the vector at a wider width.
    pub fn widen(&mut self, bit_width: u32) -> Result<()> {
        check_width(bit_width)?;
        if bit_width < self.bit_width {
            return Err(Error::InvalidParameter(format!(
                "cannot narrow from {} to {bit_width} bits",
                self.bit_width
            )));
        }
        if bit_width != self.bit_width {
            *self = Self::pack(&self.unpack(), bit_width)?;
        }
        Ok(())
    }

    /// Payload size in bytes: `ceil(len * bit_width / 8)`.
    pub fn byte_len(&self) -> usize {
        (self.len * self.bit_width as usize).div_ceil(8)
    }

    /// The contiguous little-endian payload, exactly [`byte_len`](Self::byte_len) bytes.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out: Vec<u8> = self.words.iter().flat_map(|w| w.to_le_bytes()).collect();
        out.truncate(self.byte_len());
        out
    }
}

fn check_width(bit_width: u32) -> Result<()> {
    if !(1..=MAX_BIT_WIDTH).contains(&bit_width) {
        return Err(Error::CapacityExceeded(bit_width));
    }
    Ok(())
}

fn mask(bit_width: u32) -> u64 {
    (1u64 << bit_width) - 1
}

fn words_for(len: usize, bit_width: u32) -> usize {
    (len * bit_width as usize).div_ceil(64)
}

//! Run-length encoding over dictionary codes.

use serde::{Deserialize, Serialize};

use super::bitpack::PackedVector;

/// Bytes per stored run: a `u32` code and a `u32` length.
pub const RUN_BYTES: usize = 8;

/// Maximal runs of equal codes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RleVector {
    runs: Vec<(u32, u32)>,
    len: usize,
}

impl RleVector {
    pub fn encode(codes: impl IntoIterator<Item = u32>) -> Self {
        let mut v = Self::default();
        for c in codes {
            v.push(c);
        }
        v
    }

    pub fn from_packed(packed: &PackedVector) -> Self {
        Self::encode(packed.iter())
    }

    pub fn push(&mut self, code: u32) {
        match self.runs.last_mut() {
            Some((c, n)) if *c == code && *n < u32::MAX => *n += 1,
            _ => self.runs.push((code, 1)),
        }
        self.len += 1;
    }

    /// `(code, run_length)` pairs.
    pub fn runs(&self) -> &[(u32, u32)] {
        &self.runs
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.runs
            .iter()
            .flat_map(|&(c, n)| std::iter::repeat_n(c, n as usize))
    }

    pub fn decode(&self) -> Vec<u32> {
        self.iter().collect()
    }

    pub fn get(&self, index: usize) -> Option<u32> {
        if index >= self.len {
            return None;
        }
        let mut start = 0usize;
        for &(c, n) in &self.runs {
            start += n as usize;
            if index < start {
                return Some(c);
            }
        }
        None
    }

    pub fn byte_len(&self) -> usize {
        self.runs.len() * RUN_BYTES
    }
}

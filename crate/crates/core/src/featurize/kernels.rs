//! Pure featurization kernels.
//!
//! Intervals are left-closed/right-open throughout; the last quantile bucket
//! is closed at its upper end.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dictionary::{aggregate_from_counts, AggregateKind, Dictionary};
use crate::error::{Error, Result};
use crate::value::Value;

pub fn to_float(value: &Value) -> Result<f32> {
    match value {
        Value::Int(i) => Ok(*i as f32),
        Value::Float(x) => Ok(*x as f32),
        Value::Str(s) => Err(Error::NonNumeric(s.clone())),
    }
}

/// Source statistics for the normalizers, taken from live dictionary entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnMoments {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub stddev: f64,
}

impl ColumnMoments {
    pub fn from_dictionary(dict: &Dictionary) -> Result<Self> {
        if !dict.column_type().is_numeric() {
            return Err(Error::NonNumericColumn(dict.column_type().to_string()));
        }
        let mut live = dict.live_entries().filter_map(|e| e.value.as_f64());
        let first = live.next().ok_or(Error::EmptyColumn)?;
        let (min, max) = live.fold((first, first), |(lo, hi), x| (lo.min(x), hi.max(x)));
        let scalar = |k| aggregate_from_counts(dict, k).map(|a| a.scalar().unwrap_or(0.0));
        Ok(Self {
            min,
            max,
            mean: scalar(AggregateKind::Mean)?,
            stddev: scalar(AggregateKind::StdDev)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormalizeMethod {
    MinMaxScale,
    MeanNormalize,
    ZScore,
    LogScale,
}

impl NormalizeMethod {
    /// Checks that `moments` admit this method.
    pub fn check(self, m: &ColumnMoments) -> Result<()> {
        match self {
            NormalizeMethod::MinMaxScale | NormalizeMethod::MeanNormalize if m.max <= m.min => {
                Err(Error::DegenerateRange {
                    min: m.min,
                    max: m.max,
                })
            }
            NormalizeMethod::ZScore if m.stddev <= 0.0 => Err(Error::ZeroVariance),
            _ => Ok(()),
        }
    }
}

pub fn normalize(x: f64, m: &ColumnMoments, method: NormalizeMethod) -> Result<f64> {
    method.check(m)?;
    match method {
        NormalizeMethod::MinMaxScale => Ok((x - m.min) / (m.max - m.min)),
        NormalizeMethod::MeanNormalize => Ok((x - m.mean) / (m.max - m.min)),
        NormalizeMethod::ZScore => Ok((x - m.mean) / m.stddev),
        NormalizeMethod::LogScale => {
            let arg = 1.0 + x - m.min;
            if arg < 1.0 {
                return Err(Error::DomainError(format!(
                    "log scaling needs x >= min ({}), got {x}",
                    m.min
                )));
            }
            Ok(arg.ln())
        }
    }
}

pub fn one_hot(code: u32, cardinality: usize) -> Result<Vec<f32>> {
    if code as usize >= cardinality {
        return Err(Error::CodeOutOfRange {
            code: code.into(),
            len: cardinality,
        });
    }
    let mut v = vec![0.0; cardinality];
    v[code as usize] = 1.0;
    Ok(v)
}

/// 1.0 iff `x >= cutoff`.
pub fn binarize(x: f64, cutoff: f64) -> f32 {
    if x >= cutoff {
        1.0
    } else {
        0.0
    }
}

/// Logistic threshold `1 / (1 + exp(-(x - cutoff) / scale))`; `scale > 0`.
pub fn soft_binarize(x: f64, cutoff: f64, scale: f64) -> f64 {
    1.0 / (1.0 + (-(x - cutoff) / scale).exp())
}

/// Linear range division into `n` buckets, clamped to `0..n`.
pub fn quantile_bucket(x: f64, lo: f64, hi: f64, n: u32) -> Result<u32> {
    if hi <= lo {
        return Err(Error::DegenerateRange { min: lo, max: hi });
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "quantile count must be at least 2, got {n}"
        )));
    }
    let idx = ((x - lo) * n as f64 / (hi - lo)).floor();
    Ok(idx.clamp(0.0, (n - 1) as f64) as u32)
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes
        .iter()
        .fold(OFFSET, |h, b| (h ^ *b as u64).wrapping_mul(PRIME))
}

/// Integers take the non-negative remainder; strings hash with FNV-1a 64;
/// floats hash the little-endian bytes of their bit pattern with FNV-1a 64.
pub fn hash_bucket(value: &Value, n_buckets: u64) -> Result<u64> {
    if n_buckets == 0 {
        return Err(Error::InvalidParameter("bucket count must be at least 1".into()));
    }
    Ok(match value {
        Value::Int(i) => (*i as i128).rem_euclid(n_buckets as i128) as u64,
        Value::Str(s) => fnv1a64(s.as_bytes()) % n_buckets,
        Value::Float(x) => {
            let x = if *x == 0.0 { 0.0f64 } else { *x };
            fnv1a64(&x.to_bits().to_le_bytes()) % n_buckets
        }
    })
}

/// Number of boundaries `<= x`; bucket `i` covers `[b_i, b_{i+1})`.
pub fn bucketize(x: f64, boundaries: &[f64]) -> Result<u32> {
    check_sorted(boundaries)?;
    Ok(boundaries.partition_point(|b| *b <= x) as u32)
}

pub(crate) fn check_sorted<T: PartialOrd>(boundaries: &[T]) -> Result<()> {
    if boundaries.windows(2).all(|w| w[0] < w[1]) {
        Ok(())
    } else {
        Err(Error::UnsortedBoundaries)
    }
}

/// A `cardinality x dim` lookup table of embedding vectors, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTable {
    dim: usize,
    data: Vec<f32>,
}

impl EmbeddingTable {
    pub fn new(dim: usize, data: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "embedding dimension must be at least 1".into(),
            ));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::ShapeMismatch(format!(
                "{} values do not form rows of width {dim}",
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.len());
        if let Some(bad) = rows.iter().position(|r| r.len() != dim) {
            return Err(Error::ShapeMismatch(format!(
                "row {bad} has {} values, expected {dim}",
                rows[bad].len()
            )));
        }
        Self::new(dim, rows.concat())
    }

    /// Uniform values in `[-1, 1)` from a fixed seed.
    pub fn seeded(rows: usize, dim: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::new(dim, (0..rows * dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn row(&self, code: u32) -> Option<&[f32]> {
        let start = code as usize * self.dim;
        self.data.get(start..start + self.dim)
    }

    pub(crate) fn permuted(&self, order: &[u32]) -> Result<Self> {
        let mut data = Vec::with_capacity(order.len() * self.dim);
        for &c in order {
            data.extend_from_slice(embed(c, self)?);
        }
        Self::new(self.dim, data)
    }
}

pub fn embed(code: u32, table: &EmbeddingTable) -> Result<&[f32]> {
    table.row(code).ok_or(Error::CodeOutOfRange {
        code: code.into(),
        len: table.rows(),
    })
}

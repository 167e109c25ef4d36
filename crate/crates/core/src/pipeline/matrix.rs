//! Dense row-major `f32` feature matrices and their file formats.
//!
//! Binary layout (all integers little-endian):
//!
//! ```text
//! "ADVF"            4 bytes
//! version           u16 = 1
//! n_rows            u64
//! n_cols            u32
//! n_cols x { name_len u16, name UTF-8 bytes }
//! n_rows x n_cols   f32, row-major
//! ```

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"ADVF";
pub const VERSION: u16 = 1;
/// Fixed header bytes before the column names.
pub const HEADER_LEN: usize = 4 + 2 + 8 + 4;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n_rows: usize,
    column_names: Vec<String>,
    data: Vec<f32>,
}

impl FeatureMatrix {
    pub fn new(column_names: Vec<String>, n_rows: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != n_rows * column_names.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {n_rows}x{} matrix",
                data.len(),
                column_names.len()
            )));
        }
        Ok(Self {
            n_rows,
            column_names,
            data,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.column_names.len()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[f32] {
        let n = self.n_cols();
        &self.data[r * n..(r + 1) * n]
    }

    pub fn get(&self, r: usize, c: usize) -> f32 {
        self.data[r * self.n_cols() + c]
    }

    /// Bitwise equality of shape, names, and every value.
    pub fn bit_identical(&self, other: &Self) -> bool {
        self.n_rows == other.n_rows
            && self.column_names == other.column_names
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    /// Size of the binary payload: `4 * n_rows * n_cols`.
    pub fn payload_len(&self) -> usize {
        4 * self.data.len()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<u64> {
        let mut n = 0u64;
        let header: Vec<String> = self.column_names.iter().map(|s| csv_field(s)).collect();
        let line = header.join(",") + "\n";
        w.write_all(line.as_bytes())?;
        n += line.len() as u64;
        let mut buf = String::new();
        for r in 0..self.n_rows {
            buf.clear();
            for (i, x) in self.row(r).iter().enumerate() {
                if i > 0 {
                    buf.push(',');
                }
                buf.push_str(&format_f32(*x));
            }
            buf.push('\n');
            w.write_all(buf.as_bytes())?;
            n += buf.len() as u64;
        }
        w.flush()?;
        Ok(n)
    }

    pub fn export_csv(&self, path: impl AsRef<Path>) -> Result<u64> {
        self.write_csv(BufWriter::new(File::create(path)?))
    }

    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_csv(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<u64> {
        let mut n = HEADER_LEN as u64;
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.n_rows as u64).to_le_bytes())?;
        w.write_all(&(self.n_cols() as u32).to_le_bytes())?;
        for name in &self.column_names {
            let len = u16::try_from(name.len()).map_err(|_| {
                Error::InvalidParameter(format!("column name longer than {} bytes", u16::MAX))
            })?;
            w.write_all(&len.to_le_bytes())?;
            w.write_all(name.as_bytes())?;
            n += 2 + name.len() as u64;
        }
        for x in &self.data {
            w.write_all(&x.to_le_bytes())?;
        }
        n += self.payload_len() as u64;
        w.flush()?;
        Ok(n)
    }

    pub fn export_binary(&self, path: impl AsRef<Path>) -> Result<u64> {
        self.write_binary(BufWriter::new(File::create(path)?))
    }

    pub fn to_binary_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_binary(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn from_binary(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(4)? != MAGIC {
            return Err(Error::Malformed("bad magic".into()));
        }
        let version = u16::from_le_bytes(cur.array()?);
        if version != VERSION {
            return Err(Error::Malformed(format!("unsupported version {version}")));
        }
        let n_rows = usize::try_from(u64::from_le_bytes(cur.array()?))
            .map_err(|_| Error::Malformed("row count overflows".into()))?;
        let n_cols = u32::from_le_bytes(cur.array()?) as usize;
        let mut names = Vec::with_capacity(n_cols.min(1 << 16));
        for _ in 0..n_cols {
            let len = u16::from_le_bytes(cur.array()?) as usize;
            let name = std::str::from_utf8(cur.take(len)?)
                .map_err(|_| Error::Malformed("column name is not UTF-8".into()))?;
            names.push(name.to_owned());
        }
        let count = n_rows
            .checked_mul(n_cols)
            .ok_or_else(|| Error::Malformed("matrix size overflows".into()))?;
        let payload = cur.take(
            count
                .checked_mul(4)
                .ok_or_else(|| Error::Malformed("matrix size overflows".into()))?,
        )?;
        if cur.pos != bytes.len() {
            return Err(Error::Malformed("trailing bytes after payload".into()));
        }
        let data = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")))
            .collect();
        Self::new(names, n_rows, data)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text
            .split_terminator('\n')
            .map(|l| l.strip_suffix('\r').unwrap_or(l));
        let header = lines
            .next()
            .ok_or_else(|| Error::Malformed("missing CSV header".into()))?;
        let names = parse_header(header)?;
        let mut data = Vec::new();
        let mut n_rows = 0;
        for (i, line) in lines.enumerate() {
            let before = data.len();
            for field in line.split(',') {
                let x: f32 = field
                    .parse()
                    .map_err(|_| Error::Malformed(format!("line {}: bad number {field:?}", i + 2)))?;
                data.push(x);
            }
            if data.len() - before != names.len() {
                return Err(Error::Malformed(format!(
                    "line {}: expected {} fields",
                    i + 2,
                    names.len()
                )));
            }
            n_rows += 1;
        }
        Self::new(names, n_rows, data)
    }
}

/// Shortest text that parses back to the same `f32`: the shorter of the
/// positional and exponent forms.
pub fn format_f32(x: f32) -> String {
    let plain = format!("{x}");
    let exp = format!("{x:e}");
    if exp.len() < plain.len() {
        exp
    } else {
        plain
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

fn parse_header(line: &str) -> Result<Vec<String>> {
    if line.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match (c, quoted) {
            ('"', true) if chars.peek() == Some(&'"') => {
                chars.next();
                cur.push('"');
            }
            ('"', true) => quoted = false,
            ('"', false) if cur.is_empty() => quoted = true,
            (',', false) => out.push(std::mem::take(&mut cur)),
            (c, _) => cur.push(c),
        }
    }
    if quoted {
        return Err(Error::Malformed("unterminated quote in CSV header".into()));
    }
    out.push(cur);
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|e| *e <= self.bytes.len())
            .ok_or_else(|| Error::Malformed("truncated matrix file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("exact length"))
    }
}

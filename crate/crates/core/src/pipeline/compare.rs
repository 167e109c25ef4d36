//! Reference featurization that decodes original values and applies kernels
//! row by row, used to cross-check ADV lookup.

use std::time::{Duration, Instant};

use super::{
    expansion, feature_names, select_rows, write_feature, FeatureMatrix, FeatureRequest, FeatureSource,
};
use crate::adv::{AdvSource, LearnedMapping};
use crate::error::{Error, Result};
use crate::featurize::{CompiledSpec, Output};
use crate::par::{map_range, Execution};
use crate::store::ColumnTable;
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathStats {
    pub elapsed: Duration,
    /// Estimated bytes read to produce the matrix.
    pub bytes_touched: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathReport {
    pub n_rows: usize,
    pub n_cols: usize,
    pub adv_path: PathStats,
    pub raw_path: PathStats,
}

impl PathReport {
    /// Raw-path time over ADV-path time.
    pub fn speedup(&self) -> f64 {
        self.raw_path.elapsed.as_secs_f64() / self.adv_path.elapsed.as_secs_f64().max(1e-12)
    }
}

enum RawSource {
    Spec(CompiledSpec),
    Learned { mapping: LearnedMapping, default: f32 },
}

struct RawFeature<'t> {
    column: &'t str,
    source: RawSource,
    label: String,
    expand: Option<usize>,
    width: usize,
}

impl RawFeature<'_> {
    fn n_cols(&self) -> usize {
        self.expand.unwrap_or(self.width)
    }
}

fn resolve_raw<'t>(table: &'t ColumnTable, request: &FeatureRequest) -> Result<Vec<RawFeature<'t>>> {
    request
        .features
        .iter()
        .map(|item| {
            let col = table.column(&item.column)?;
            let label = item.display_name();
            let source = match &item.source {
                FeatureSource::Adv { adv } => {
                    let a = col
                        .adv(adv)
                        .ok_or_else(|| Error::UnknownFeature(format!("{}.{adv}", item.column)))?;
                    match a.source() {
                        AdvSource::Spec { spec } => RawSource::Spec(spec.clone()),
                        AdvSource::Learned { mapping } => RawSource::Learned {
                            mapping: mapping.clone(),
                            default: a.default_output(),
                        },
                    }
                }
                FeatureSource::Inline { spec } => {
                    RawSource::Spec(CompiledSpec::compile(spec, col.dictionary())?)
                }
            };
            let (adv_source, width) = match &source {
                RawSource::Spec(s) => (AdvSource::Spec { spec: s.clone() }, s.width()),
                RawSource::Learned { mapping, .. } => (
                    AdvSource::Learned {
                        mapping: mapping.clone(),
                    },
                    1,
                ),
            };
            let expand = expansion(item, &label, &adv_source, width, col.dictionary().len())?;
            Ok(RawFeature {
                column: col.name(),
                source,
                label,
                expand,
                width,
            })
        })
        .collect()
}

/// Materializes `request` by decoding each selected row's original values and
/// applying the transforms directly.
pub fn materialize_raw(
    table: &ColumnTable,
    request: &FeatureRequest,
    exec: Execution,
) -> Result<FeatureMatrix> {
    Ok(materialize_raw_counted(table, request, exec)?.0)
}

fn materialize_raw_counted(
    table: &ColumnTable,
    request: &FeatureRequest,
    exec: Execution,
) -> Result<(FeatureMatrix, u64)> {
    let features = resolve_raw(table, request)?;
    let rows = select_rows(table, request)?;
    let names: Vec<String> = features
        .iter()
        .flat_map(|f| feature_names(&f.label, f.n_cols(), f.expand.is_some() || f.width > 1))
        .collect();
    let n_cols = names.len();

    let mut values_by_column: Vec<(&str, Vec<Value>)> = Vec::new();
    for f in &features {
        if values_by_column.iter().any(|(c, _)| *c == f.column) {
            continue;
        }
        let dict = table.dictionary(f.column)?;
        let codes = table.gather_codes_with(f.column, &rows, exec)?;
        let values = codes
            .iter()
            .map(|&c| dict.decode(c).cloned())
            .collect::<Result<Vec<_>>>()?;
        values_by_column.push((f.column, values));
    }
    let bytes: u64 = values_by_column
        .iter()
        .map(|(_, vs)| vs.iter().map(|v| 4 + v.text_len() as u64).sum::<u64>())
        .sum();

    let per_row = map_range(rows.len(), exec, |r| -> Result<Vec<f32>> {
        let mut out = vec![0.0f32; n_cols];
        let mut col = 0;
        for f in &features {
            let values = &values_by_column
                .iter()
                .find(|(c, _)| *c == f.column)
                .expect("decoded above")
                .1;
            let value = &values[r];
            let computed: Vec<f32> = match &f.source {
                RawSource::Spec(spec) => {
                    let dict = table.dictionary(f.column)?;
                    let code = dict.encode(value).ok_or_else(|| {
                        Error::InvalidRequest(format!("value {value} missing from dictionary"))
                    })?;
                    match spec.apply(value, code)? {
                        Output::Scalar(x) => vec![x],
                        Output::Vector(v) => v.to_vec(),
                    }
                }
                RawSource::Learned { mapping, default } => {
                    vec![mapping.get(value).unwrap_or(*default)]
                }
            };
            let w = f.n_cols();
            write_feature(&f.label, f.expand, &computed, rows[r], &mut out[col..col + w])?;
            col += w;
        }
        Ok(out)
    });
    let mut data = Vec::with_capacity(rows.len() * n_cols);
    for r in per_row {
        data.extend(r?);
    }
    Ok((FeatureMatrix::new(names, rows.len(), data)?, bytes))
}

/// Runs ADV-lookup and raw-recompute materialization, checks that they agree
/// bit for bit, and reports time and bytes touched for each.
pub fn compare_paths(table: &ColumnTable, request: &FeatureRequest) -> Result<PathReport> {
    compare_paths_with(table, request, Execution::default())
}

pub fn compare_paths_with(
    table: &ColumnTable,
    request: &FeatureRequest,
    exec: Execution,
) -> Result<PathReport> {
    let t0 = Instant::now();
    let adv = super::materialize_with(table, request, exec)?;
    let adv_elapsed = t0.elapsed();

    let t1 = Instant::now();
    let (raw, raw_bytes) = materialize_raw_counted(table, request, exec)?;
    let raw_elapsed = t1.elapsed();

    if adv.n_rows() != raw.n_rows() || adv.column_names() != raw.column_names() {
        return Err(Error::InvalidRequest(
            "ADV and raw paths produced different shapes".into(),
        ));
    }
    if let Some(i) = (0..adv.data().len()).find(|&i| adv.data()[i].to_bits() != raw.data()[i].to_bits()) {
        let n = adv.n_cols();
        return Err(Error::MismatchDetected {
            row: i / n,
            column: i % n,
            adv: adv.data()[i],
            raw: raw.data()[i],
        });
    }

    let distinct_cols = {
        let mut cols: Vec<&str> = request.features.iter().map(|f| f.column.as_str()).collect();
        cols.sort_unstable();
        cols.dedup();
        cols.len() as u64
    };
    let rows = adv.n_rows() as u64;
    let adv_bytes = rows * distinct_cols * 4 + adv.payload_len() as u64;
    Ok(PathReport {
        n_rows: adv.n_rows(),
        n_cols: adv.n_cols(),
        adv_path: PathStats {
            elapsed: adv_elapsed,
            bytes_touched: adv_bytes,
        },
        raw_path: PathStats {
            elapsed: raw_elapsed,
            bytes_touched: raw_bytes + adv.payload_len() as u64,
        },
    })
}

//! Feature materialization: select rows, gather codes, expand ADV slots into
//! a dense `f32` matrix.

mod compare;
pub mod matrix;

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

pub use compare::{compare_paths, compare_paths_with, materialize_raw, PathReport, PathStats};
pub use matrix::FeatureMatrix;

use crate::adv::{Adv, AdvSource};
use crate::error::{Error, Result};
use crate::featurize::{CompiledSpec, FeatureSpec};
use crate::par::{map_range, Execution};
use crate::store::{ColumnTable, Predicate};

/// Rows per materialization work unit.
const ROW_CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeatureSource {
    /// A registered ADV on the column.
    Adv { adv: String },
    /// A transform compiled to a transient ADV for this request only.
    Inline { spec: FeatureSpec },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureItem {
    pub column: String,
    #[serde(flatten)]
    pub source: FeatureSource,
    /// Expand an index-valued output into this many one-hot columns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub one_hot: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl FeatureItem {
    pub fn adv(column: impl Into<String>, adv: impl Into<String>) -> Self {
        Self {
            column: column.into(),
            source: FeatureSource::Adv { adv: adv.into() },
            one_hot: None,
            label: None,
        }
    }

    pub fn inline(column: impl Into<String>, spec: FeatureSpec) -> Self {
        Self {
            column: column.into(),
            source: FeatureSource::Inline { spec },
            one_hot: None,
            label: None,
        }
    }

    pub fn with_one_hot(mut self, cardinality: usize) -> Self {
        self.one_hot = Some(cardinality);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn display_name(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        match &self.source {
            FeatureSource::Adv { adv } => adv.clone(),
            FeatureSource::Inline { spec } => format!("{}_{}", self.column, spec.kind_name()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureRequest {
    /// `None` selects every live row.
    pub predicate: Option<Predicate>,
    pub features: Vec<FeatureItem>,
}

impl FeatureRequest {
    pub fn new(features: Vec<FeatureItem>) -> Self {
        Self {
            predicate: None,
            features,
        }
    }

    pub fn filtered(mut self, predicate: Predicate) -> Self {
        self.predicate = Some(predicate);
        self
    }
}

/// A feature resolved against a table.
pub(crate) struct Resolved<'t> {
    pub column: &'t str,
    pub adv: Cow<'t, Adv>,
    pub label: String,
    /// One-hot cardinality, if expanded.
    pub expand: Option<usize>,
}

impl Resolved<'_> {
    pub fn n_cols(&self) -> usize {
        self.expand.unwrap_or(self.adv.width())
    }

    pub fn names(&self) -> Vec<String> {
        feature_names(
            &self.label,
            self.n_cols(),
            self.expand.is_some() || self.adv.width() > 1,
        )
    }

    pub fn write(&self, slot: &[f32], row: u64, out: &mut [f32]) -> Result<()> {
        write_feature(&self.label, self.expand, slot, row, out)
    }
}

pub(crate) fn resolve<'t>(table: &'t ColumnTable, request: &FeatureRequest) -> Result<Vec<Resolved<'t>>> {
    request
        .features
        .iter()
        .map(|item| {
            let col = table.column(&item.column)?;
            let label = item.display_name();
            let adv = match &item.source {
                FeatureSource::Adv { adv } => Cow::Borrowed(
                    col.adv(adv)
                        .ok_or_else(|| Error::UnknownFeature(format!("{}.{adv}", item.column)))?,
                ),
                FeatureSource::Inline { spec } => {
                    let compiled = CompiledSpec::compile(spec, col.dictionary())?;
                    Cow::Owned(Adv::from_compiled(label.clone(), compiled, col.dictionary())?)
                }
            };
            let expand = expansion(item, &label, adv.source(), adv.width(), col.dictionary().len())?;
            Ok(Resolved {
                column: col.name(),
                adv,
                label,
                expand,
            })
        })
        .collect()
}

/// One-hot cardinality for `item`, if its output is expanded. One-hot
/// transforms expand to the dictionary cardinality unless told otherwise.
pub(crate) fn expansion(
    item: &FeatureItem,
    label: &str,
    source: &AdvSource,
    width: usize,
    dict_len: usize,
) -> Result<Option<usize>> {
    let index_valued = match source {
        AdvSource::Spec { spec } => spec.is_index_valued(),
        AdvSource::Learned { .. } => true,
    };
    match item.one_hot {
        Some(_) if !index_valued || width != 1 => Err(Error::InvalidRequest(format!(
            "feature {label} does not produce bucket indices"
        ))),
        Some(0) => Err(Error::InvalidRequest(format!(
            "feature {label}: one-hot cardinality must be positive"
        ))),
        Some(card) => Ok(Some(card)),
        None => Ok(matches!(
            source,
            AdvSource::Spec {
                spec: CompiledSpec::OneHot
            }
        )
        .then_some(dict_len.max(1))),
    }
}

/// Column names contributed by one feature.
pub(crate) fn feature_names(label: &str, n_cols: usize, indexed: bool) -> Vec<String> {
    (0..n_cols)
        .map(|i| {
            if indexed {
                format!("{label}[{i}]")
            } else {
                label.to_owned()
            }
        })
        .collect()
}

/// Writes one feature value for `row` into `out`, expanding to one-hot when
/// `expand` is set.
pub(crate) fn write_feature(
    label: &str,
    expand: Option<usize>,
    slot: &[f32],
    row: u64,
    out: &mut [f32],
) -> Result<()> {
    match expand {
        Some(card) => {
            let idx = slot[0];
            if idx.fract() != 0.0 || idx < 0.0 || idx as usize >= card {
                return Err(Error::InvalidRequest(format!(
                    "feature {label} has output {idx} at row {row}, outside one-hot range 0..{card}"
                )));
            }
            out.fill(0.0);
            out[idx as usize] = 1.0;
        }
        None => {
            if slot.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite {
                    feature: label.to_owned(),
                    row,
                });
            }
            out.copy_from_slice(slot);
        }
    }
    Ok(())
}

pub(crate) fn select_rows(table: &ColumnTable, request: &FeatureRequest) -> Result<Vec<u64>> {
    Ok(table
        .scan(request.predicate.as_ref().unwrap_or(&Predicate::all()))?
        .rows)
}

pub fn materialize(table: &ColumnTable, request: &FeatureRequest) -> Result<FeatureMatrix> {
    materialize_with(table, request, Execution::default())
}

/// Builds the matrix by dictionary-code to ADV-slot lookup; original values
/// are never decoded.
pub fn materialize_with(
    table: &ColumnTable,
    request: &FeatureRequest,
    exec: Execution,
) -> Result<FeatureMatrix> {
    let features = resolve(table, request)?;
    let rows = select_rows(table, request)?;
    let names: Vec<String> = features.iter().flat_map(|f| f.names()).collect();
    let n_cols = names.len();

    let mut codes_by_column: Vec<(&str, Vec<u32>)> = Vec::new();
    for f in &features {
        if !codes_by_column.iter().any(|(c, _)| *c == f.column) {
            codes_by_column.push((f.column, table.gather_codes_with(f.column, &rows, exec)?));
        }
    }
    let codes: Vec<&[u32]> = features
        .iter()
        .map(|f| {
            codes_by_column
                .iter()
                .find(|(c, _)| *c == f.column)
                .map(|(_, v)| v.as_slice())
                .expect("gathered above")
        })
        .collect();

    let n_chunks = rows.len().div_ceil(ROW_CHUNK);
    let chunks = map_range(n_chunks, exec, |k| -> Result<Vec<f32>> {
        let start = k * ROW_CHUNK;
        let end = (start + ROW_CHUNK).min(rows.len());
        let mut out = vec![0.0f32; (end - start) * n_cols];
        for (local, r) in (start..end).enumerate() {
            let row_out = &mut out[local * n_cols..(local + 1) * n_cols];
            let mut col = 0;
            for (f, fc) in features.iter().zip(&codes) {
                let w = f.n_cols();
                let slot = f.adv.slot(fc[r]).ok_or(Error::CodeOutOfRange {
                    code: fc[r].into(),
                    len: f.adv.len(),
                })?;
                f.write(slot, rows[r], &mut row_out[col..col + w])?;
                col += w;
            }
        }
        Ok(out)
    });
    let mut data = Vec::with_capacity(rows.len() * n_cols);
    for c in chunks {
        data.extend(c?);
    }
    FeatureMatrix::new(names, rows.len(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adv::LearnedMapping;
    use crate::value::{ColumnType, Value};

    fn ages() -> ColumnTable {
        let mut t = ColumnTable::new(vec![("age".into(), ColumnType::Integer)]).unwrap();
        t.append_rows([55, 42, 8, 17].map(|a| vec![Value::Int(a)]).to_vec())
            .unwrap();
        t.register_adv(
            "age",
            "decade",
            &FeatureSpec::Bucketize {
                boundaries: (1..=9).map(|d| Value::Int(d * 10)).collect(),
            },
        )
        .unwrap();
        t.register_adv("age", "age_fp", &FeatureSpec::Float).unwrap();
        t
    }

    #[test]
    fn decade_and_float() {
        let t = ages();
        let req = FeatureRequest::new(vec![
            FeatureItem::adv("age", "decade"),
            FeatureItem::adv("age", "age_fp"),
        ]);
        let m = materialize(&t, &req).unwrap();
        assert_eq!(m.column_names(), &["decade", "age_fp"]);
        assert_eq!(m.data(), &[5.0, 55.0, 4.0, 42.0, 0.0, 8.0, 1.0, 17.0]);
    }

    #[test]
    fn one_hot_expansion() {
        let t = ages();
        let req = FeatureRequest::new(vec![FeatureItem::adv("age", "decade").with_one_hot(10)])
            .filtered(Predicate::eq("age", 55));
        let m = materialize(&t, &req).unwrap();
        assert_eq!(m.n_cols(), 10);
        assert_eq!(m.column_names()[5], "decade[5]");
        let mut expect = vec![0.0; 10];
        expect[5] = 1.0;
        assert_eq!(m.row(0), expect.as_slice());

        let too_small = FeatureRequest::new(vec![FeatureItem::adv("age", "decade").with_one_hot(3)]);
        assert!(matches!(
            materialize(&t, &too_small),
            Err(Error::InvalidRequest(_))
        ));
        let not_index = FeatureRequest::new(vec![FeatureItem::adv("age", "age_fp").with_one_hot(3)]);
        assert!(matches!(
            materialize(&t, &not_index),
            Err(Error::InvalidRequest(_))
        ));
    }

    #[test]
    fn inline_one_hot_uses_dictionary_cardinality() {
        let t = ages();
        let req = FeatureRequest::new(vec![FeatureItem::inline("age", FeatureSpec::OneHot)]);
        let m = materialize(&t, &req).unwrap();
        assert_eq!(m.n_cols(), 4);
        assert_eq!(m.column_names()[0], "age_one_hot[0]");
        for r in 0..4 {
            assert_eq!(m.row(r).iter().sum::<f32>(), 1.0);
            assert_eq!(m.get(r, r), 1.0);
        }
    }

    #[test]
    fn empty_selection_keeps_names() {
        let t = ages();
        let req = FeatureRequest::new(vec![
            FeatureItem::adv("age", "decade"),
            FeatureItem::adv("age", "age_fp"),
        ])
        .filtered(Predicate::range("age", 200, 300));
        let m = materialize(&t, &req).unwrap();
        assert_eq!((m.n_rows(), m.n_cols()), (0, 2));
        assert_eq!(m.column_names(), &["decade", "age_fp"]);
    }

    #[test]
    fn unknown_features() {
        let t = ages();
        let req = FeatureRequest::new(vec![FeatureItem::adv("age", "nope")]);
        assert!(matches!(materialize(&t, &req), Err(Error::UnknownFeature(_))));
        let req = FeatureRequest::new(vec![FeatureItem::adv("zip", "decade")]);
        assert!(matches!(materialize(&t, &req), Err(Error::UnknownColumn(_))));
    }

    #[test]
    fn learned_feature_in_matrix() {
        let mut t = ages();
        let g = LearnedMapping::new(vec![(Value::Int(42), 8.0)], "ML").unwrap();
        t.import_learned_mapping("age", "g1", &g, 0.0).unwrap();
        let req = FeatureRequest::new(vec![FeatureItem::adv("age", "g1")]);
        assert_eq!(materialize(&t, &req).unwrap().data(), &[0.0, 8.0, 0.0, 0.0]);
    }

    #[test]
    fn request_json_shape() {
        let item: FeatureItem =
            serde_json::from_str(r#"{"column":"age","adv":"decade","one_hot":10}"#).unwrap();
        assert_eq!(item, FeatureItem::adv("age", "decade").with_one_hot(10));
        let item: FeatureItem =
            serde_json::from_str(r#"{"column":"age","spec":{"kind":"quantile","n_quantiles":4}}"#).unwrap();
        assert_eq!(
            item,
            FeatureItem::inline("age", FeatureSpec::Quantile { n_quantiles: 4 })
        );
    }
}

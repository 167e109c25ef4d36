//! Transform descriptors, the applicability matrix, and fitting against a
//! column dictionary.

use serde::{Deserialize, Serialize};

use super::kernels::{self, check_sorted, ColumnMoments, EmbeddingTable, NormalizeMethod};
use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::value::{ColumnType, Value};

/// Largest bucket count whose indices are exact in `f32`.
pub const MAX_BUCKETS: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureSpec {
    Float,
    OneHot,
    Embedding {
        table: EmbeddingTable,
    },
    MinMaxScale,
    MeanNormalize,
    ZScore,
    LogScale,
    /// Numeric columns: `x >= cutoff`. String columns: `x == cutoff`.
    /// With `scale`, numeric columns use the logistic form instead.
    Binarize {
        cutoff: Value,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scale: Option<f64>,
    },
    Quantile {
        n_quantiles: u32,
    },
    HashBucket {
        n_buckets: u64,
    },
    Bucketize {
        boundaries: Vec<Value>,
    },
}

impl FeatureSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            FeatureSpec::Float => "float",
            FeatureSpec::OneHot => "one_hot",
            FeatureSpec::Embedding { .. } => "embedding",
            FeatureSpec::MinMaxScale => "min_max_scale",
            FeatureSpec::MeanNormalize => "mean_normalize",
            FeatureSpec::ZScore => "z_score",
            FeatureSpec::LogScale => "log_scale",
            FeatureSpec::Binarize { .. } => "binarize",
            FeatureSpec::Quantile { .. } => "quantile",
            FeatureSpec::HashBucket { .. } => "hash_bucket",
            FeatureSpec::Bucketize { .. } => "bucketize",
        }
    }

    /// Checks parameter invariants that do not depend on the column.
    pub fn validate(&self) -> Result<()> {
        match self {
            FeatureSpec::Quantile { n_quantiles } if *n_quantiles < 2 => Err(Error::InvalidParameter(
                format!("quantile count must be at least 2, got {n_quantiles}"),
            )),
            FeatureSpec::HashBucket { n_buckets } if *n_buckets == 0 || *n_buckets > MAX_BUCKETS => {
                Err(Error::InvalidParameter(format!(
                    "bucket count must be in 1..={MAX_BUCKETS}, got {n_buckets}"
                )))
            }
            FeatureSpec::Binarize { scale: Some(s), .. } if s.is_nan() || *s <= 0.0 => Err(
                Error::InvalidParameter(format!("logistic scale must be positive, got {s}")),
            ),
            FeatureSpec::Bucketize { boundaries } => check_sorted(boundaries),
            _ => Ok(()),
        }
    }
}

/// Whether `spec` may be applied to a column of type `ty`.
pub fn applicable(spec: &FeatureSpec, ty: ColumnType) -> bool {
    match spec {
        FeatureSpec::Float
        | FeatureSpec::MinMaxScale
        | FeatureSpec::MeanNormalize
        | FeatureSpec::ZScore
        | FeatureSpec::LogScale
        | FeatureSpec::Quantile { .. } => ty.is_numeric(),
        FeatureSpec::OneHot
        | FeatureSpec::Embedding { .. }
        | FeatureSpec::Binarize { .. }
        | FeatureSpec::HashBucket { .. }
        | FeatureSpec::Bucketize { .. } => true,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "snake_case")]
pub enum Boundaries {
    Numeric(Vec<f64>),
    Text(Vec<String>),
}

/// A [`FeatureSpec`] with its data-dependent parameters resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CompiledSpec {
    Float,
    OneHot,
    Embedding {
        table: EmbeddingTable,
    },
    Normalize {
        method: NormalizeMethod,
        moments: ColumnMoments,
    },
    Threshold {
        cutoff: f64,
        scale: Option<f64>,
    },
    Equals {
        target: Value,
    },
    Quantile {
        n_quantiles: u32,
        lo: f64,
        hi: f64,
    },
    HashBucket {
        n_buckets: u64,
    },
    Bucketize {
        boundaries: Boundaries,
    },
}

/// One slot's worth of output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Output<'a> {
    Scalar(f32),
    Vector(&'a [f32]),
}

impl CompiledSpec {
    /// Fits `spec` to the live contents of `dict`.
    pub fn compile(spec: &FeatureSpec, dict: &Dictionary) -> Result<Self> {
        let ty = dict.column_type();
        if !applicable(spec, ty) {
            return Err(Error::NotApplicable {
                kind: spec.kind_name(),
                ty,
            });
        }
        spec.validate()?;
        let normalizer = |method: NormalizeMethod| -> Result<Self> {
            let moments = ColumnMoments::from_dictionary(dict)?;
            method.check(&moments)?;
            Ok(CompiledSpec::Normalize { method, moments })
        };
        Ok(match spec {
            FeatureSpec::Float => CompiledSpec::Float,
            FeatureSpec::OneHot => CompiledSpec::OneHot,
            FeatureSpec::Embedding { table } => CompiledSpec::Embedding { table: table.clone() },
            FeatureSpec::MinMaxScale => normalizer(NormalizeMethod::MinMaxScale)?,
            FeatureSpec::MeanNormalize => normalizer(NormalizeMethod::MeanNormalize)?,
            FeatureSpec::ZScore => normalizer(NormalizeMethod::ZScore)?,
            FeatureSpec::LogScale => normalizer(NormalizeMethod::LogScale)?,
            FeatureSpec::Binarize { cutoff, scale } => {
                if ty.is_numeric() {
                    let cutoff = cutoff.as_f64().ok_or_else(|| Error::TypeMismatch {
                        expected: ty,
                        found: cutoff.to_string(),
                    })?;
                    CompiledSpec::Threshold {
                        cutoff,
                        scale: *scale,
                    }
                } else {
                    CompiledSpec::Equals {
                        target: cutoff.clone().coerce(ty)?,
                    }
                }
            }
            FeatureSpec::Quantile { n_quantiles } => {
                let m = ColumnMoments::from_dictionary(dict)?;
                if m.max <= m.min {
                    return Err(Error::DegenerateRange {
                        min: m.min,
                        max: m.max,
                    });
                }
                CompiledSpec::Quantile {
                    n_quantiles: *n_quantiles,
                    lo: m.min,
                    hi: m.max,
                }
            }
            FeatureSpec::HashBucket { n_buckets } => CompiledSpec::HashBucket {
                n_buckets: *n_buckets,
            },
            FeatureSpec::Bucketize { boundaries } => CompiledSpec::Bucketize {
                boundaries: typed_boundaries(boundaries, ty)?,
            },
        })
    }

    /// Output width of one slot.
    pub fn width(&self) -> usize {
        match self {
            CompiledSpec::Embedding { table } => table.dim(),
            _ => 1,
        }
    }

    /// Whether outputs are bucket indices (eligible for one-hot expansion).
    pub fn is_index_valued(&self) -> bool {
        matches!(
            self,
            CompiledSpec::OneHot
                | CompiledSpec::Equals { .. }
                | CompiledSpec::Threshold { scale: None, .. }
                | CompiledSpec::Quantile { .. }
                | CompiledSpec::HashBucket { .. }
                | CompiledSpec::Bucketize { .. }
        )
    }

    /// Applies the transform to `value`, whose dictionary code is `code`.
    pub fn apply(&self, value: &Value, code: u32) -> Result<Output<'_>> {
        let num = || value.as_f64().ok_or_else(|| Error::NonNumeric(value.to_string()));
        let scalar = |x: f32| Ok(Output::Scalar(x));
        match self {
            CompiledSpec::Float => scalar(kernels::to_float(value)?),
            CompiledSpec::OneHot => scalar(code as f32),
            CompiledSpec::Embedding { table } => Ok(Output::Vector(kernels::embed(code, table)?)),
            CompiledSpec::Normalize { method, moments } => {
                scalar(kernels::normalize(num()?, moments, *method)? as f32)
            }
            CompiledSpec::Threshold { cutoff, scale: None } => scalar(kernels::binarize(num()?, *cutoff)),
            CompiledSpec::Threshold {
                cutoff,
                scale: Some(s),
            } => scalar(kernels::soft_binarize(num()?, *cutoff, *s) as f32),
            CompiledSpec::Equals { target } => scalar(if value == target { 1.0 } else { 0.0 }),
            CompiledSpec::Quantile { n_quantiles, lo, hi } => {
                scalar(kernels::quantile_bucket(num()?, *lo, *hi, *n_quantiles)? as f32)
            }
            CompiledSpec::HashBucket { n_buckets } => scalar(kernels::hash_bucket(value, *n_buckets)? as f32),
            CompiledSpec::Bucketize { boundaries } => scalar(match boundaries {
                Boundaries::Numeric(b) => kernels::bucketize(num()?, b)? as f32,
                Boundaries::Text(b) => {
                    let s = value.as_str().ok_or_else(|| Error::TypeMismatch {
                        expected: ColumnType::CategoricalString,
                        found: value.to_string(),
                    })?;
                    b.partition_point(|x| x.as_bytes() <= s.as_bytes()) as f32
                }
            }),
        }
    }
}

fn typed_boundaries(boundaries: &[Value], ty: ColumnType) -> Result<Boundaries> {
    let b = if ty.is_numeric() {
        let nums = boundaries
            .iter()
            .map(|v| {
                v.as_f64().ok_or_else(|| Error::TypeMismatch {
                    expected: ty,
                    found: v.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        check_sorted(&nums)?;
        Boundaries::Numeric(nums)
    } else {
        let strs = boundaries
            .iter()
            .map(|v| {
                v.as_str().map(str::to_owned).ok_or_else(|| Error::TypeMismatch {
                    expected: ty,
                    found: v.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        check_sorted(&strs)?;
        Boundaries::Text(strs)
    };
    Ok(b)
}

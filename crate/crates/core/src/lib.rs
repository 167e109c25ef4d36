//! Columnar storage whose per-column dictionaries carry live counts and
//! Augmented Dictionary Values (ADVs): precomputed feature outputs, one slot
//! per dictionary entry. Feature matrices are produced by looking up each
//! row's dictionary code in the ADV slots instead of recomputing transforms
//! over raw values.
//!
//! ```
//! use augdict::{ColumnTable, ColumnType, FeatureItem, FeatureRequest, FeatureSpec, Value};
//!
//! let mut t = ColumnTable::new(vec![("age".into(), ColumnType::Integer)]).unwrap();
//! t.append_rows(vec![vec![Value::Int(55)], vec![Value::Int(8)]]).unwrap();
//! let decades = FeatureSpec::Bucketize {
//!     boundaries: (1..=9).map(|d| Value::Int(d * 10)).collect(),
//! };
//! t.register_adv("age", "decade", &decades).unwrap();
//! let m = augdict::materialize(&t, &FeatureRequest::new(vec![FeatureItem::adv("age", "decade")])).unwrap();
//! assert_eq!(m.data(), &[5.0, 0.0]);
//! ```

pub mod adv;
pub mod dictionary;
pub mod error;
pub mod featurize;
pub mod par;
pub mod pipeline;
pub mod store;
pub mod synth;
pub mod value;

pub use adv::{Adv, AdvSource, AdvStats, LearnedMapping};
pub use dictionary::{
    aggregate_from_counts, packed_bit_width, Aggregate, AggregateKind, BitWidth, Dictionary, DictionaryEntry,
};
pub use error::{Error, Result};
pub use featurize::{applicable, CompiledSpec, EmbeddingTable, FeatureSpec};
pub use par::Execution;
pub use pipeline::{
    compare_paths, materialize, materialize_with, FeatureItem, FeatureMatrix, FeatureRequest, FeatureSource,
    PathReport,
};
pub use store::{parse_predicate, ColumnTable, Predicate, ScanOptions, ScanResult, ScanStats, Schema};
pub use value::{ColumnType, Value};

//! Featurization kernels and transform descriptors.

pub mod kernels;
pub mod spec;

pub use kernels::{
    binarize, bucketize, embed, fnv1a64, hash_bucket, normalize, one_hot, quantile_bucket, soft_binarize,
    to_float, ColumnMoments, EmbeddingTable, NormalizeMethod,
};
pub use spec::{applicable, Boundaries, CompiledSpec, FeatureSpec, Output};

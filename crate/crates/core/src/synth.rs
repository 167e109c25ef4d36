//! Seeded synthetic tables for benchmarks, the `bench` command, and tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::featurize::{EmbeddingTable, FeatureSpec};
use crate::pipeline::{FeatureItem, FeatureRequest};
use crate::store::ColumnTable;
use crate::value::{ColumnType, Value};

pub const US_STATES: [&str; 50] = [
    "Alabama",
    "Alaska",
    "Arizona",
    "Arkansas",
    "California",
    "Colorado",
    "Connecticut",
    "Delaware",
    "Florida",
    "Georgia",
    "Hawaii",
    "Idaho",
    "Illinois",
    "Indiana",
    "Iowa",
    "Kansas",
    "Kentucky",
    "Louisiana",
    "Maine",
    "Maryland",
    "Massachusetts",
    "Michigan",
    "Minnesota",
    "Mississippi",
    "Missouri",
    "Montana",
    "Nebraska",
    "Nevada",
    "New Hampshire",
    "New Jersey",
    "New Mexico",
    "New York",
    "North Carolina",
    "North Dakota",
    "Ohio",
    "Oklahoma",
    "Oregon",
    "Pennsylvania",
    "Rhode Island",
    "South Carolina",
    "South Dakota",
    "Tennessee",
    "Texas",
    "Utah",
    "Vermont",
    "Virginia",
    "Washington",
    "West Virginia",
    "Wisconsin",
    "Wyoming",
];

/// Schema of [`mixed_table`].
pub fn mixed_schema() -> Vec<(String, ColumnType)> {
    vec![
        ("state".into(), ColumnType::CategoricalString),
        ("age".into(), ColumnType::Integer),
        ("income".into(), ColumnType::Float),
        ("zip".into(), ColumnType::Integer),
    ]
}

/// A `rows`-row table of states, ages, incomes, and zip codes.
pub fn mixed_table(rows: usize, seed: u64, imcu_rows: usize) -> Result<ColumnTable> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = ColumnTable::with_imcu_rows(mixed_schema(), imcu_rows)?;
    let data = (0..rows)
        .map(|_| {
            vec![
                Value::str(US_STATES[rng.gen_range(0..US_STATES.len())]),
                Value::Int(rng.gen_range(0..100)),
                Value::Float((rng.gen_range(0.0..250_000.0f64) * 100.0).round() / 100.0),
                Value::Int(rng.gen_range(10_000..99_999)),
            ]
        })
        .collect();
    t.append_rows(data)?;
    Ok(t)
}

/// Registers a handful of ADVs on a [`mixed_table`] and returns an
/// eight-feature request over them and inline transforms.
pub fn mixed_request(table: &mut ColumnTable, seed: u64) -> Result<FeatureRequest> {
    let decades = FeatureSpec::Bucketize {
        boundaries: (1..=9).map(|d| Value::Int(d * 10)).collect(),
    };
    table.register_adv("age", "decade", &decades)?;
    table.register_adv("age", "age_fp", &FeatureSpec::Float)?;
    table.register_adv("income", "income_z", &FeatureSpec::ZScore)?;
    let n_states = table.dictionary("state")?.len();
    table.register_adv(
        "state",
        "state_emb",
        &FeatureSpec::Embedding {
            table: EmbeddingTable::seeded(n_states, 4, seed)?,
        },
    )?;
    Ok(FeatureRequest::new(vec![
        FeatureItem::adv("age", "decade").with_one_hot(10),
        FeatureItem::adv("age", "age_fp"),
        FeatureItem::adv("income", "income_z"),
        FeatureItem::inline("income", FeatureSpec::LogScale),
        FeatureItem::inline("income", FeatureSpec::Quantile { n_quantiles: 4 }).with_one_hot(4),
        FeatureItem::inline("state", FeatureSpec::OneHot),
        FeatureItem::adv("state", "state_emb"),
        FeatureItem::inline("zip", FeatureSpec::HashBucket { n_buckets: 1000 }),
    ]))
}

//! Generators and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use augdict::{ColumnTable, ColumnType, Predicate, Value};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const WORDS: [&str; 24] = [
    "amber", "basalt", "cedar", "delta", "ember", "fjord", "garnet", "harbor", "indigo", "juniper", "kelp",
    "lumen", "marble", "nectar", "onyx", "pollen", "quartz", "russet", "sienna", "tundra", "umber", "violet",
    "willow", "zephyr",
];

/// A column's value domain: strings from a word pool, bounded ints, or
/// floats on a two-decimal grid.
#[derive(Debug, Clone)]
pub enum Domain {
    Words(usize),
    Ints(i64, i64),
    Floats(f64, f64),
}

impl Domain {
    pub fn random(rng: &mut ChaCha8Rng, ty: ColumnType) -> Self {
        match ty {
            ColumnType::CategoricalString => Domain::Words(rng.gen_range(2..=WORDS.len() * 3)),
            ColumnType::Integer => {
                let lo = rng.gen_range(-500..500);
                Domain::Ints(lo, lo + rng.gen_range(1..2000))
            }
            ColumnType::Float => {
                let lo = rng.gen_range(-1000.0..1000.0f64).round();
                Domain::Floats(lo, lo + rng.gen_range(1.0..5000.0f64).round())
            }
        }
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Value {
        match *self {
            Domain::Words(n) => Value::str(word(rng.gen_range(0..n))),
            Domain::Ints(lo, hi) => Value::Int(rng.gen_range(lo..=hi)),
            Domain::Floats(lo, hi) => Value::Float((rng.gen_range(lo..=hi) * 100.0).round() / 100.0),
        }
    }
}

/// Word `i` of an unbounded pool: the base words, then suffixed variants.
pub fn word(i: usize) -> String {
    let base = WORDS[i % WORDS.len()];
    match i / WORDS.len() {
        0 => base.to_owned(),
        k => format!("{base}-{k}"),
    }
}

/// Random schema with at least one column of each type.
pub fn random_schema(rng: &mut ChaCha8Rng) -> Vec<(String, ColumnType)> {
    let mut types = vec![
        ColumnType::CategoricalString,
        ColumnType::Integer,
        ColumnType::Float,
    ];
    for _ in 0..rng.gen_range(0..=3) {
        types.push(
            *[
                ColumnType::CategoricalString,
                ColumnType::Integer,
                ColumnType::Float,
            ]
            .choose(rng)
            .unwrap(),
        );
    }
    types.shuffle(rng);
    types
        .into_iter()
        .enumerate()
        .map(|(i, t)| (format!("c{i}"), t))
        .collect()
}

pub struct Fixture {
    pub table: ColumnTable,
    pub domains: Vec<Domain>,
    /// Rows as appended, kept independently of the engine.
    pub rows: Vec<Vec<Value>>,
}

pub fn random_fixture(rng: &mut ChaCha8Rng, n_rows: usize, imcu_rows: usize) -> Fixture {
    random_fixture_sorted(rng, n_rows, imcu_rows, None)
}

/// Like [`random_fixture`], optionally with rows sorted on one column so
/// zone maps become selective.
pub fn random_fixture_sorted(
    rng: &mut ChaCha8Rng,
    n_rows: usize,
    imcu_rows: usize,
    sort_by: Option<usize>,
) -> Fixture {
    let schema = random_schema(rng);
    let domains: Vec<Domain> = schema.iter().map(|(_, t)| Domain::random(rng, *t)).collect();
    let mut rows: Vec<Vec<Value>> = (0..n_rows)
        .map(|_| domains.iter().map(|d| d.sample(rng)).collect())
        .collect();
    if let Some(c) = sort_by {
        let c = c % schema.len();
        rows.sort_by(|a, b| a[c].cmp(&b[c]));
    }
    let mut table = ColumnTable::with_imcu_rows(schema, imcu_rows).unwrap();
    table.append_rows(rows.clone()).unwrap();
    Fixture { table, domains, rows }
}

/// Random Eq, InList, Range, or a conjunction of two of them.
pub fn random_predicate(
    rng: &mut ChaCha8Rng,
    schema: &[(String, ColumnType)],
    domains: &[Domain],
) -> Predicate {
    let leaf = |rng: &mut ChaCha8Rng| {
        let c = rng.gen_range(0..schema.len());
        let name = schema[c].0.clone();
        let d = &domains[c];
        match rng.gen_range(0..3) {
            0 => Predicate::eq(name, d.sample(rng)),
            1 => {
                let n = rng.gen_range(1..=4);
                Predicate::in_list(name, (0..n).map(|_| d.sample(rng)).collect())
            }
            _ => {
                let (a, b) = (d.sample(rng), d.sample(rng));
                if a <= b {
                    Predicate::range(name, a, b)
                } else {
                    Predicate::range(name, b, a)
                }
            }
        }
    };
    if rng.gen_bool(0.2) {
        Predicate::And(vec![leaf(rng), leaf(rng)])
    } else {
        leaf(rng)
    }
}

/// Live count per value, by brute force.
pub fn recount<'a>(values: impl IntoIterator<Item = &'a Value>) -> BTreeMap<Value, u64> {
    let mut m = BTreeMap::new();
    for v in values {
        *m.entry(v.clone()).or_insert(0) += 1;
    }
    m
}

/// Population sum, mean and standard deviation, two-pass.
pub fn moments(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let sum: f64 = xs.iter().sum();
    let mean = sum / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (sum, mean, var.sqrt())
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}

/// Entropy (bits) and Gini-Simpson index of a frequency table.
pub fn entropy_and_diversity(freqs: impl IntoIterator<Item = u64>) -> (f64, f64) {
    let freqs: Vec<u64> = freqs.into_iter().filter(|&f| f > 0).collect();
    let n: u64 = freqs.iter().sum();
    let mut h = 0.0;
    let mut simpson = 0.0;
    for f in freqs {
        let p = f as f64 / n as f64;
        h -= p * p.log2();
        simpson += p * p;
    }
    (h, 1.0 - simpson)
}

/// Smallest `b >= 1` with `2^b >= c`, by repeated doubling.
pub fn width_oracle(c: u64) -> u32 {
    let mut b = 1;
    while (1u128 << b) < c as u128 {
        b += 1;
    }
    b
}

mod common;

use std::collections::BTreeMap;

use augdict::{packed_bit_width, AggregateKind, ColumnTable, ColumnType, Dictionary, Value};
use common::*;
use proptest::prelude::*;

fn small_strings() -> impl Strategy<Value = Vec<Value>> {
    prop::collection::vec("[a-e]{0,3}".prop_map(Value::str), 0..300)
}

fn ints() -> impl Strategy<Value = Vec<Value>> {
    prop::collection::vec((-50i64..50).prop_map(Value::Int), 0..300)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn codes_are_dense_first_occurrence(values in small_strings()) {
        let d = Dictionary::build(values.clone(), ColumnType::CategoricalString).unwrap();
        let mut first_seen: Vec<Value> = Vec::new();
        for v in &values {
            if !first_seen.contains(v) {
                first_seen.push(v.clone());
            }
        }
        prop_assert_eq!(d.len(), first_seen.len());
        for (i, v) in first_seen.iter().enumerate() {
            prop_assert_eq!(d.encode(v), Some(i as u32));
            prop_assert_eq!(d.decode(i as u32).unwrap(), v);
        }
        prop_assert!(d.decode(d.len() as u32).is_err());
    }

    #[test]
    fn counts_match_recount(values in ints()) {
        let d = Dictionary::build(values.clone(), ColumnType::Integer).unwrap();
        let brute = recount(&values);
        let counted: BTreeMap<Value, u64> = d.entries().iter().map(|e| (e.value.clone(), e.count)).collect();
        prop_assert_eq!(counted, brute);
        prop_assert_eq!(d.total_live_rows(), values.len() as u64);
    }

    #[test]
    fn bounds_are_attained_and_sound(values in prop::collection::vec(-1.0e9..1.0e9f64, 1..200)) {
        let vs: Vec<Value> = values.iter().map(|x| Value::Float(*x)).collect();
        let d = Dictionary::build(vs.clone(), ColumnType::Float).unwrap();
        let (lo, hi) = (d.min().unwrap(), d.max().unwrap());
        prop_assert!(vs.iter().all(|v| lo <= v && v <= hi));
        prop_assert!(vs.contains(lo) && vs.contains(hi));
    }

    #[test]
    fn deletes_conserve_counts(values in ints(), kill in prop::collection::vec(any::<prop::sample::Index>(), 0..100)) {
        prop_assume!(!values.is_empty());
        let mut t = ColumnTable::with_imcu_rows(vec![("x".into(), ColumnType::Integer)], 64).unwrap();
        t.append_rows(values.iter().map(|v| vec![v.clone()]).collect()).unwrap();
        let ids: Vec<u64> = kill.iter().map(|i| i.index(values.len()) as u64).collect();
        t.delete_rows(&ids);
        let survivors: Vec<Value> = (0..values.len())
            .filter(|i| !ids.contains(&(*i as u64)))
            .map(|i| values[i].clone())
            .collect();
        let brute = recount(&survivors);
        let d = t.dictionary("x").unwrap();
        for e in d.entries() {
            prop_assert_eq!(e.count, brute.get(&e.value).copied().unwrap_or(0));
        }
        // Count-0 entries stay until compaction.
        prop_assert_eq!(d.len(), recount(&values).len());
        prop_assert_eq!(t.live_row_count(), survivors.len() as u64);
    }
}

#[test]
fn width_law_up_to_a_million() {
    for c in 1..(1u64 << 20) {
        let w = packed_bit_width(c).unwrap();
        assert_eq!(w.bits, width_oracle(c), "cardinality {c}");
    }
    assert!(packed_bit_width(0).is_err());
}

#[test]
fn bounds_are_kept_after_delete_and_tightened_by_compact() {
    let mut t = ColumnTable::new(vec![("age".into(), ColumnType::Integer)]).unwrap();
    t.append_rows([3, 40, 17].iter().map(|&x| vec![Value::Int(x)]).collect())
        .unwrap();
    t.delete_rows(&[1]);
    let d = t.dictionary("age").unwrap();
    assert_eq!(d.max(), Some(&Value::Int(40)));
    assert_eq!(d.count(1), 0);
    t.compact().unwrap();
    let d = t.dictionary("age").unwrap();
    assert_eq!(d.max(), Some(&Value::Int(17)));
    assert_eq!(d.len(), 2);
}

#[test]
fn aggregates_ignore_deleted_rows() {
    let mut t = ColumnTable::new(vec![("x".into(), ColumnType::Float)]).unwrap();
    t.append_rows(
        [1.0, 2.0, 2.0, 10.0]
            .iter()
            .map(|&x| vec![Value::Float(x)])
            .collect(),
    )
    .unwrap();
    t.delete_rows(&[3]);
    let mean = t.aggregate("x", AggregateKind::Mean).unwrap().scalar().unwrap();
    assert_eq!(mean, 5.0 / 3.0);
    let (_, _, std) = moments(&[1.0, 2.0, 2.0]);
    let got = t.aggregate("x", AggregateKind::StdDev).unwrap().scalar().unwrap();
    assert!(rel_close(got, std, 1e-12));
    assert!(t.aggregate("x", AggregateKind::Sum).is_ok());
    assert_eq!(t.imcu_reads(), 0);
}

use augdict::featurize::{bucketize, hash_bucket, quantile_bucket, soft_binarize};
use augdict::pipeline::materialize_raw;
use augdict::synth::{mixed_request, mixed_table};
use augdict::{
    compare_paths, materialize, materialize_with, ColumnTable, ColumnType, EmbeddingTable, Error, Execution,
    FeatureItem, FeatureMatrix, FeatureRequest, FeatureSpec, Predicate, Value,
};
use proptest::prelude::*;

fn ages(xs: &[i64]) -> ColumnTable {
    let mut t = ColumnTable::new(vec![("age".into(), ColumnType::Integer)]).unwrap();
    t.append_rows(xs.iter().map(|&x| vec![Value::Int(x)]).collect())
        .unwrap();
    t
}

fn decades() -> FeatureSpec {
    FeatureSpec::Bucketize {
        boundaries: (1..=9).map(|d| Value::Int(d * 10)).collect(),
    }
}

#[test]
fn one_hot_expansion_of_a_bucket() {
    let mut t = ages(&[55, 8]);
    t.register_adv("age", "decade", &decades()).unwrap();
    let m = materialize(
        &t,
        &FeatureRequest::new(vec![FeatureItem::adv("age", "decade").with_one_hot(10)]),
    )
    .unwrap();
    assert_eq!(m.n_cols(), 10);
    let mut want = [0.0f32; 10];
    want[5] = 1.0;
    assert_eq!(m.row(0), want);
    assert_eq!(m.row(1)[0], 1.0);
    assert_eq!(m.column_names()[5], "decade[5]");
    // Too few columns for bucket 5.
    let narrow = FeatureRequest::new(vec![FeatureItem::adv("age", "decade").with_one_hot(4)]);
    assert!(materialize(&t, &narrow).is_err());
}

#[test]
fn mixed_request_paths_agree() {
    let mut t = mixed_table(20_000, 31, 4096).unwrap();
    let req = mixed_request(&mut t, 31).unwrap();
    let report = compare_paths(&t, &req).unwrap();
    assert_eq!(report.n_rows, 20_000);
    assert_eq!(report.n_cols, 10 + 1 + 1 + 1 + 4 + 50 + 4 + 1);
    assert!(report.adv_path.bytes_touched < report.raw_path.bytes_touched);
    let par = materialize_with(&t, &req, Execution::Parallel).unwrap();
    let seq = materialize_with(&t, &req, Execution::Sequential).unwrap();
    assert!(par.bit_identical(&seq));
    let raw = materialize_raw(&t, &req, Execution::Parallel).unwrap();
    assert!(par.bit_identical(&raw));
}

#[test]
fn filtered_requests_follow_the_scan() {
    let mut t = mixed_table(5000, 32, 1000).unwrap();
    let req = mixed_request(&mut t, 32).unwrap();
    let p = Predicate::range("age", 20, 29);
    let rows = t.scan(&p).unwrap().rows;
    let m = materialize(&t, &req.clone().filtered(p)).unwrap();
    assert_eq!(m.n_rows(), rows.len());
    // Column 10 is the float age, which must land in the decade.
    for r in 0..m.n_rows() {
        let age = m.get(r, 10);
        assert!((20.0..=29.0).contains(&age));
        assert_eq!(m.get(r, 2), 1.0);
    }
}

#[test]
fn inserts_past_the_embedding_table_are_refused() {
    let mut t = ColumnTable::new(vec![("s".into(), ColumnType::CategoricalString)]).unwrap();
    t.append_rows(vec![vec![Value::str("a")], vec![Value::str("b")]])
        .unwrap();
    let table = EmbeddingTable::from_rows(&[vec![0.5, 1.0], vec![-1.0, 2.0]]).unwrap();
    t.register_adv("s", "emb", &FeatureSpec::Embedding { table })
        .unwrap();
    t.append_rows(vec![vec![Value::str("b")]]).unwrap();
    assert!(t.append_rows(vec![vec![Value::str("c")]]).is_err());
    assert_eq!(t.row_count(), 3);
    let m = materialize(&t, &FeatureRequest::new(vec![FeatureItem::adv("s", "emb")])).unwrap();
    assert_eq!(m.data(), &[0.5, 1.0, -1.0, 2.0, -1.0, 2.0]);
    assert_eq!(m.column_names(), ["emb[0]", "emb[1]"]);
}

#[test]
fn log_scale_rejects_values_below_the_fitted_minimum() {
    let mut t = ages(&[10, 20]);
    t.register_adv("age", "log", &FeatureSpec::LogScale).unwrap();
    assert!(matches!(
        t.append_rows(vec![vec![Value::Int(5)]]),
        Err(Error::DomainError(_))
    ));
    assert_eq!(t.row_count(), 2);
    t.append_rows(vec![vec![Value::Int(30)]]).unwrap();
    let slot = t.adv("age", "log").unwrap().slot(2).unwrap()[0];
    assert_eq!(slot, (21.0f64).ln() as f32);
}

#[test]
fn categorical_binarize_marks_one_value() {
    let mut t = ColumnTable::new(vec![("state".into(), ColumnType::CategoricalString)]).unwrap();
    t.append_rows(
        ["Ohio", "Texas", "Ohio"]
            .iter()
            .map(|s| vec![Value::str(*s)])
            .collect(),
    )
    .unwrap();
    let spec = FeatureSpec::Binarize {
        cutoff: Value::str("Ohio"),
        scale: None,
    };
    let m = materialize(&t, &FeatureRequest::new(vec![FeatureItem::inline("state", spec)])).unwrap();
    assert_eq!(m.data(), &[1.0, 0.0, 1.0]);
}

#[test]
fn exports_round_trip_through_files() {
    let mut t = mixed_table(300, 33, 128).unwrap();
    let req = mixed_request(&mut t, 33).unwrap();
    let m = materialize(&t, &req).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (csv, bin) = (dir.path().join("f.csv"), dir.path().join("f.bin"));
    let csv_len = m.export_csv(&csv).unwrap();
    let bin_len = m.export_binary(&bin).unwrap();
    assert_eq!(std::fs::metadata(&csv).unwrap().len(), csv_len);
    assert_eq!(std::fs::metadata(&bin).unwrap().len(), bin_len);
    let from_csv = FeatureMatrix::from_csv(&std::fs::read_to_string(&csv).unwrap()).unwrap();
    let from_bin = FeatureMatrix::from_binary(&std::fs::read(&bin).unwrap()).unwrap();
    assert!(from_csv.bit_identical(&m));
    assert!(from_bin.bit_identical(&m));
    assert_eq!(from_bin.column_names(), m.column_names());
}

/// Linear-scan reference: number of boundaries at or below `x`.
fn bucket_oracle(x: f64, b: &[f64]) -> u32 {
    b.iter().filter(|&&e| e <= x).count() as u32
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 2000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn bucketize_matches_linear_scan(b in prop::collection::btree_set(-100i32..100, 0..12), x in -120.0..120.0f64) {
        let b: Vec<f64> = b.into_iter().map(f64::from).collect();
        prop_assert_eq!(bucketize(x, &b).unwrap(), bucket_oracle(x, &b));
    }

    #[test]
    fn quantile_matches_linear_boundaries(lo in -1e3..1e3f64, span in 1.0..1e3f64, n in 2u32..20, t in 0.0..1.0f64) {
        let hi = lo + span;
        let x = lo + t * span;
        let got = quantile_bucket(x, lo, hi, n).unwrap();
        prop_assert!(got < n);
        // The bucket's interval contains x, up to rounding at its edges.
        let width = span / n as f64;
        let (a, b) = (lo + got as f64 * width, lo + (got + 1) as f64 * width);
        prop_assert!(x >= a - 1e-9 * span && x <= b + 1e-9 * span, "{} not in [{}, {}]", x, a, b);
        prop_assert_eq!(quantile_bucket(hi, lo, hi, n).unwrap(), n - 1);
        prop_assert_eq!(quantile_bucket(lo - 1.0, lo, hi, n).unwrap(), 0);
    }

    #[test]
    fn integer_hash_is_the_euclidean_remainder(x in any::<i64>(), n in 1u64..1_000_000) {
        let want = (x as i128).rem_euclid(n as i128) as u64;
        prop_assert_eq!(hash_bucket(&Value::Int(x), n).unwrap(), want);
    }

    #[test]
    fn soft_binarize_is_a_logistic(x in -50.0..50.0f64, c in -50.0..50.0f64, s in 0.1..10.0f64) {
        let y = soft_binarize(x, c, s);
        prop_assert!((0.0..=1.0).contains(&y));
        let want = 1.0 / (1.0 + (-(x - c) / s).exp());
        prop_assert!((y - want).abs() <= 1e-12);
    }
}

#[test]
fn tables_with_advs_survive_a_json_round_trip() {
    let mut t = mixed_table(2000, 34, 256).unwrap();
    let req = mixed_request(&mut t, 34).unwrap();
    let extra = [
        (
            "state",
            "is_ohio",
            FeatureSpec::Binarize {
                cutoff: Value::str("Ohio"),
                scale: None,
            },
        ),
        (
            "state",
            "half",
            FeatureSpec::Bucketize {
                boundaries: vec![Value::str("M")],
            },
        ),
        ("state", "one_hot", FeatureSpec::OneHot),
        (
            "age",
            "old",
            FeatureSpec::Binarize {
                cutoff: Value::Int(60),
                scale: Some(2.0),
            },
        ),
        ("income", "log", FeatureSpec::LogScale),
        ("income", "q", FeatureSpec::Quantile { n_quantiles: 5 }),
        ("income", "mm", FeatureSpec::MinMaxScale),
        ("zip", "h", FeatureSpec::HashBucket { n_buckets: 97 }),
    ];
    for (col, name, spec) in &extra {
        t.register_adv(col, name, spec).unwrap();
    }
    let json = serde_json::to_string(&t).unwrap();
    let mut back: ColumnTable = serde_json::from_str(&json).unwrap();
    back.rebuild_indexes();
    assert!(materialize(&back, &req)
        .unwrap()
        .bit_identical(&materialize(&t, &req).unwrap()));
    let one = FeatureRequest::new(extra.iter().map(|(c, n, _)| FeatureItem::adv(*c, *n)).collect());
    assert!(materialize(&back, &one)
        .unwrap()
        .bit_identical(&materialize(&t, &one).unwrap()));
}

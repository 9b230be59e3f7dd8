use std::path::PathBuf;

use dakg_core::profile::ProfileError;
use dakg_core::{annotate, profile_file, profile_reader, DatasetProfile, Graph, ProfileOptions, Schema, TargetType, Term};
use proptest::prelude::*;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn profile(name: &str, target: &str) -> DatasetProfile {
    profile_file(data(name), target, &ProfileOptions::default()).unwrap()
}

#[test]
fn iris() {
    let p = profile("iris.csv", "species");
    assert_eq!(p.n_instances, 150);
    assert_eq!(p.n_features, 4);
    assert_eq!(p.n_numeric, 4);
    assert_eq!(p.n_categorical, 0);
    assert_eq!(p.pct_missing, 0.0);
    assert_eq!(p.target_type, TargetType::Categorical);
    assert_eq!(p.n_classes, Some(3));
    assert_eq!(p.imbalance, Some(1.0));
    assert_eq!(p.std_target, None);
}

#[test]
fn breast_cancer() {
    let p = profile("breast_cancer.csv", "diagnosis");
    assert_eq!((p.n_instances, p.n_features, p.n_numeric), (569, 30, 30));
    assert_eq!(p.n_classes, Some(2));
    assert!((p.imbalance.unwrap() - 1.6839622641509433).abs() < 1e-12);
}

#[test]
fn wine() {
    let p = profile("wine.csv", "cultivar");
    assert_eq!((p.n_instances, p.n_features), (178, 13));
    assert_eq!(p.n_classes, Some(3));
    assert!((p.imbalance.unwrap() - 1.4791666666666667).abs() < 1e-12);
}

#[test]
fn diabetes_is_numerical() {
    let p = profile("diabetes.csv", "progression");
    assert_eq!((p.n_instances, p.n_features), (442, 10));
    assert_eq!(p.target_type, TargetType::Numerical);
    assert!((p.std_target.unwrap() - 77.00574586945044).abs() < 1e-9);
    assert_eq!(p.n_classes, None);
}

#[test]
fn missing_target_column() {
    let e = profile_file(data("iris.csv"), "label", &ProfileOptions::default()).unwrap_err();
    assert!(matches!(e, ProfileError::MissingTarget(ref t) if t == "label"));
}

#[test]
fn annotate_twice_keeps_one_value_per_characteristic() {
    let schema = Schema::bootstrap();
    let mut g = schema.graph().clone();
    let mut p = profile("iris.csv", "species");
    let before = g.len();
    let e = annotate(&mut g, &schema, &p).unwrap();
    assert_eq!(g.len(), before + 10);
    p.n_instances = 151;
    annotate(&mut g, &schema, &p).unwrap();
    assert_eq!(g.len(), before + 10);
    assert_eq!(DatasetProfile::from_graph(&g, &e).unwrap().n_instances, 151);
    assert!(g.is_instance_of(&e, &Term::iri("da:Dataset").unwrap()));
}

#[test]
fn profile_round_trips_through_graph() {
    let schema = Schema::bootstrap();
    let mut g = Graph::new();
    for (f, t) in [("iris.csv", "species"), ("diabetes.csv", "progression")] {
        let p = profile(f, t);
        let e = annotate(&mut g, &schema, &p).unwrap();
        assert_eq!(DatasetProfile::from_graph(&g, &e).unwrap(), p);
    }
}

fn table() -> impl Strategy<Value = Vec<(Option<i32>, Option<String>, u8)>> {
    prop::collection::vec(
        (prop::option::weighted(0.8, -50i32..50), prop::option::weighted(0.8, "[a-c]"), 0u8..4),
        1..40,
    )
}

fn render(rows: &[(Option<i32>, Option<String>, u8)]) -> String {
    let mut s = String::from("num,cat,y\n");
    for (n, c, y) in rows {
        s.push_str(&format!(
            "{},{},{}\n",
            n.map(|v| v.to_string()).unwrap_or_default(),
            c.clone().unwrap_or_default(),
            y
        ));
    }
    s
}

fn prof(csv: &str) -> DatasetProfile {
    profile_reader("t", csv.as_bytes(), "y", &ProfileOptions::default()).unwrap()
}

proptest! {
    #[test]
    fn row_order_does_not_matter(rows in table(), seed in any::<u64>()) {
        let mut shuffled = rows.clone();
        let n = shuffled.len();
        for i in (1..n).rev() {
            shuffled.swap(i, (seed as usize ^ i.wrapping_mul(2654435761)) % (i + 1));
        }
        prop_assert_eq!(prof(&render(&rows)), prof(&render(&shuffled)));
    }

    #[test]
    fn blanking_cells_never_lowers_missing_fraction(rows in table(), idx in any::<usize>()) {
        let a = prof(&render(&rows));
        let mut more = rows.clone();
        let i = idx % more.len();
        more[i].0 = None;
        more[i].1 = None;
        let b = prof(&render(&more));
        prop_assert!(b.pct_missing >= a.pct_missing);
        prop_assert!(a.is_valid() && b.is_valid());
    }
}

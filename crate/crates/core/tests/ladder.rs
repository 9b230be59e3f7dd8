//! Hand-counted ladder fixture.
//!
//! | task | user | dataset | intent         | metric    |
//! |------|------|---------|----------------|-----------|
//! | t1   | u1   | D       | Classification | Accuracy  |
//! | t2   | u1   | D       | Classification | Accuracy  |
//! | t3   | u1   | E       | Classification | F1-Score  |
//! | t4   | u1   | E       | Classification | F1-Score  |
//! | t5   | u1   | E       | Classification | F1-Score  |
//! | t6   | u2   | D       | Classification | AUC       |
//! | t7   | u2   | D       | Classification | AUC       |
//! | t8   | u2   | E       | Classification | Precision |
//! | t9   | u2   | E       | Regression     | R2        |
//!
//! u1 is a novice and u2 an expert. D has 150 instances and E has 5000.

use dakg_core::vocab::{class, da, prop, RDF_TYPE};
use dakg_core::{Graph, Ladder, LadderError, LadderFilters, Schema, Target, TaskContext, Term, Triple};
use proptest::prelude::*;

const ROWS: [(&str, &str, &str, &str, &str); 9] = [
    ("t1", "u1", "D", "Classification", "Accuracy"),
    ("t2", "u1", "D", "Classification", "Accuracy"),
    ("t3", "u1", "E", "Classification", "F1-Score"),
    ("t4", "u1", "E", "Classification", "F1-Score"),
    ("t5", "u1", "E", "Classification", "F1-Score"),
    ("t6", "u2", "D", "Classification", "AUC"),
    ("t7", "u2", "D", "Classification", "AUC"),
    ("t8", "u2", "E", "Classification", "Precision"),
    ("t9", "u2", "E", "Regression", "R2"),
];

fn fixture() -> (Schema, Graph) {
    let schema = Schema::bootstrap();
    let mut g = schema.graph().clone();
    let mut ts = Vec::new();
    for (u, level) in [("u1", "novice"), ("u2", "expert")] {
        ts.push(Triple::iris(&da(u), RDF_TYPE, class::USER));
        ts.push(Triple::with_literal(&da(u), prop::HAS_EXPERTISE, Term::string(level)));
    }
    for (d, n) in [("D", 150), ("E", 5000)] {
        ts.push(Triple::iris(&da(d), RDF_TYPE, class::DATASET));
        ts.push(Triple::with_literal(&da(d), prop::N_INSTANCES, Term::integer(n)));
    }
    for (t, u, d, i, m) in ROWS {
        ts.push(Triple::iris(&da(t), RDF_TYPE, class::TASK));
        ts.push(Triple::iris(&da(t), prop::REQUESTED_BY, &da(u)));
        ts.push(Triple::iris(&da(t), prop::USES_DATASET, &da(d)));
        ts.push(Triple::iris(&da(t), prop::HAS_INTENT, &da(i)));
        ts.push(Triple::iris(&da(t), prop::HAS_REQUIREMENT, &da(m)));
    }
    schema.validate_batch(&g, &ts).unwrap();
    g.extend(ts).unwrap();
    (schema, g)
}

fn ctx() -> TaskContext {
    TaskContext::new(Term::Iri(da("u1"))).with_dataset(Term::Iri(da("D"))).with_intent(Term::Iri(da("Classification")))
}

fn drop_task(g: &mut Graph, task: &str, rel: &str) {
    for t in g.find(Some(&Term::Iri(da(task))), Some(&Term::Iri(rel.into())), None) {
        g.remove(&t);
    }
}

fn top(items: &[(Term, usize)]) -> Vec<(String, usize)> {
    items.iter().map(|(t, c)| (t.as_iri().unwrap().to_string(), *c)).collect()
}

#[test]
fn ladder_walks_all_four_levels() {
    let (_, mut g) = fixture();
    let l = Ladder::default();

    let r = l.recommend(&g, &ctx(), Target::Metric, 3).unwrap();
    assert_eq!((r.level_used, r.template_id.as_str()), (1, "metric-L1"));
    assert_eq!(top(&r.items), vec![("da:Accuracy".into(), 2)]);

    // u1 never used D any more.
    for t in ["t1", "t2"] {
        drop_task(&mut g, t, prop::USES_DATASET);
    }
    let r = l.recommend(&g, &ctx(), Target::Metric, 3).unwrap();
    assert_eq!(r.level_used, 2);
    assert_eq!(top(&r.items), vec![("da:F1-Score".into(), 3), ("da:Accuracy".into(), 2)]);

    // u1 has no tasks at all; other users did use D.
    for t in ["t1", "t2", "t3", "t4", "t5"] {
        drop_task(&mut g, t, prop::REQUESTED_BY);
    }
    let r = l.recommend(&g, &ctx(), Target::Metric, 3).unwrap();
    assert_eq!(r.level_used, 3);
    assert_eq!(top(&r.items), vec![("da:AUC".into(), 2)]);

    // Nobody used D; fall back to all classification tasks.
    for t in ["t6", "t7"] {
        drop_task(&mut g, t, prop::USES_DATASET);
    }
    let r = l.recommend(&g, &ctx(), Target::Metric, 3).unwrap();
    assert_eq!(r.level_used, 4);
    assert_eq!(top(&r.items), vec![("da:AUC".into(), 2), ("da:Precision".into(), 1)]);

    for (t, ..) in ROWS {
        drop_task(&mut g, t, prop::HAS_REQUIREMENT);
    }
    assert_eq!(l.recommend(&g, &ctx(), Target::Metric, 3), Err(LadderError::NoData));
}

#[test]
fn intent_ladder_counts_intents() {
    let (_, g) = fixture();
    let c = TaskContext::new(Term::Iri(da("u2"))).with_dataset(Term::Iri(da("E")));
    let r = Ladder::default().recommend(&g, &c, Target::Intent, 3).unwrap();
    assert_eq!(r.level_used, 1);
    assert_eq!(top(&r.items), vec![("da:Classification".into(), 1), ("da:Regression".into(), 1)]);
}

#[test]
fn expertise_filter_restricts_population() {
    let (_, g) = fixture();
    let mut c = ctx();
    c.filters = LadderFilters { expertise: Some("expert".into()), ..Default::default() };
    let r = Ladder::default().recommend(&g, &c, Target::Metric, 3).unwrap();
    // u1 is a novice, so the user levels are empty; experts on D used AUC twice.
    assert_eq!(r.level_used, 3);
    assert_eq!(top(&r.items), vec![("da:AUC".into(), 2)]);
}

#[test]
fn dataset_size_filter() {
    let (_, g) = fixture();
    let mut c = TaskContext::new(Term::Iri(da("u1"))).with_intent(Term::Iri(da("Classification")));
    c.filters = LadderFilters { min_instances: Some(1000), ..Default::default() };
    let r = Ladder::default().recommend(&g, &c, Target::Metric, 3).unwrap();
    assert_eq!(r.level_used, 2);
    assert_eq!(top(&r.items), vec![("da:F1-Score".into(), 3)]);
}

#[test]
fn empty_store_has_no_data() {
    let mut g = Graph::new();
    g.add(Triple::iris("da:u", RDF_TYPE, class::USER)).unwrap();
    let c = TaskContext::new(Term::Iri("da:u".into()));
    assert_eq!(Ladder::default().recommend(&g, &c, Target::Intent, 3), Err(LadderError::NoData));
}

#[test]
fn preconditions() {
    let (_, g) = fixture();
    let c = TaskContext::new(Term::Iri(da("u1")));
    assert_eq!(Ladder::default().recommend(&g, &c, Target::Metric, 3), Err(LadderError::IntentRequired(Target::Metric)));
    let c = TaskContext::new(Term::Iri(da("ghost")));
    assert!(matches!(Ladder::default().recommend(&g, &c, Target::Intent, 3), Err(LadderError::UnknownUser(_))));
}

#[test]
fn metric_results_are_requirements() {
    let (schema, g) = fixture();
    let r = Ladder::default().recommend(&g, &ctx(), Target::Metric, 10).unwrap();
    for (m, _) in r.items {
        assert!(g.is_instance_of(&m, &Term::Iri(class::EVALUATION_REQUIREMENT.into())), "{m}");
        assert!(schema.metrics_for(&da("Classification")).contains(&m.as_iri().unwrap().to_string()));
    }
}

proptest! {
    #[test]
    fn removing_triples_never_lowers_level(order in Just((0..45usize).collect::<Vec<_>>()).prop_shuffle()) {
        let (_, mut g) = fixture();
        let task_triples: Vec<Triple> = ROWS
            .iter()
            .flat_map(|(t, ..)| g.find(Some(&Term::Iri(da(t))), None, None))
            .collect();
        let level = |g: &Graph| match Ladder::default().recommend(g, &ctx(), Target::Metric, 3) {
            Ok(r) => r.level_used,
            Err(LadderError::NoData) => 5,
            Err(e) => panic!("{e}"),
        };
        let mut last = level(&g);
        for i in order {
            g.remove(&task_triples[i]);
            let now = level(&g);
            prop_assert!(now >= last);
            last = now;
        }
        prop_assert_eq!(last, 5);
    }
}

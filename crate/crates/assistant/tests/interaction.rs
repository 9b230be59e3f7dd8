use dakg_assistant::interaction::{check_submission, next_task_id};
use dakg_assistant::{
    annotate_interaction, candidates_for, recommend, stub_execute, AnticipateError, AnticipateOptions, ConstraintAction,
    ConstraintSpec, Feedback, InteractionError, InteractionRecord, Method, ModelEvaluation, Sources, Submission,
};
use dakg_core::vocab::{class, da, prop, RDF_TYPE};
use dakg_core::{Graph, Ladder, Schema, Target, TaskContext, Term, Triple};
use dakg_kge::SHORTCUT_RELATION;

fn world() -> (Schema, Graph) {
    let schema = Schema::bootstrap();
    let mut g = schema.graph().clone();
    g.add(Triple::iris(&da("ann"), RDF_TYPE, class::USER)).unwrap();
    g.add(Triple::iris(&da("D"), RDF_TYPE, class::DATASET)).unwrap();
    (schema, g)
}

fn constraint(alg: &str, action: ConstraintAction, is_hard: bool) -> ConstraintSpec {
    ConstraintSpec { algorithm: da(alg), action, is_hard }
}

fn submission(constraints: Vec<ConstraintSpec>) -> Submission {
    Submission {
        user: da("ann"),
        dataset: da("D"),
        intent: da("Classification"),
        metric: da("Accuracy"),
        constraints,
        time_budget: None,
    }
}

fn record(task: &str) -> InteractionRecord {
    InteractionRecord {
        task: task.to_string(),
        submission: submission(vec![
            constraint("SVC", ConstraintAction::Use, true),
            constraint("RandomForest", ConstraintAction::Exclude, false),
        ]),
        workflow: vec![da("StandardScaler"), da("PCA"), da("SVC")],
        evaluation: ModelEvaluation { metric: da("Accuracy"), value: 0.93 },
        feedback: Some(Feedback { score: 5, tags: vec!["fast".into()] }),
    }
}

fn count(g: &Graph, r: &str) -> usize {
    g.find(None, Some(&Term::Iri(r.into())), None).len()
}

#[test]
fn candidates_follow_the_intent() {
    let (schema, g) = world();
    let ctx = TaskContext::new(Term::Iri(da("ann"))).with_intent(Term::Iri(da("Classification")));
    let metrics = candidates_for(&schema, &g, &ctx, prop::HAS_REQUIREMENT).unwrap();
    assert!(metrics.contains(&Term::Iri(da("Accuracy"))));
    assert!(!metrics.contains(&Term::Iri(da("R2"))));
    let algs = candidates_for(&schema, &g, &ctx, SHORTCUT_RELATION).unwrap();
    assert!(algs.contains(&Term::Iri(da("SVC"))));
    assert!(!algs.contains(&Term::Iri(da("SVR"))));

    let open = TaskContext::new(Term::Iri(da("ann")));
    let all = candidates_for(&schema, &g, &open, prop::HAS_REQUIREMENT).unwrap();
    assert!(all.len() > metrics.len() && all.contains(&Term::Iri(da("R2"))));
    assert!(candidates_for(&schema, &g, &open, prop::HAS_INTENT).unwrap().contains(&Term::Iri(da("Classification"))));
    assert!(matches!(candidates_for(&schema, &g, &open, prop::REQUESTED_BY), Err(AnticipateError::UnsupportedRelation(_))));
}

#[test]
fn stub_executor_honours_constraints() {
    let (schema, _) = world();
    let sub = submission(vec![
        constraint("SVC", ConstraintAction::Use, true),
        constraint("StandardScaler", ConstraintAction::Use, true),
        constraint("RandomForest", ConstraintAction::Exclude, true),
    ]);
    let (wf, ev) = stub_execute(&schema, &sub, 3).unwrap();
    assert_eq!(wf.first().map(String::as_str), Some(da("StandardScaler").as_str()));
    assert_eq!(wf.last().map(String::as_str), Some(da("SVC").as_str()));
    assert!(!wf.contains(&da("RandomForest")));
    assert_eq!(ev.metric, da("Accuracy"));
    assert!((0.0..=1.0).contains(&ev.value));
    assert_eq!(stub_execute(&schema, &sub, 3).unwrap(), (wf, ev));

    for seed in 0..20 {
        let (wf, _) = stub_execute(&schema, &submission(Vec::new()), seed).unwrap();
        assert_eq!(schema.algorithm_kind(wf.last().unwrap()), Some(dakg_core::schema::AlgorithmKind::Modeling));
        assert!(wf.iter().all(|a| schema.algorithms_for(&da("Classification")).contains(a)));
    }

    let bad = submission(vec![constraint("SVC", ConstraintAction::Use, true), constraint("SVC", ConstraintAction::Exclude, true)]);
    assert!(matches!(stub_execute(&schema, &bad, 0), Err(InteractionError::Contradiction(_))));
}

#[test]
fn submissions_are_checked() {
    let (_, g) = world();
    assert!(check_submission(&g, &submission(Vec::new())).is_ok());
    let mut s = submission(Vec::new());
    s.metric = da("Classification");
    assert!(matches!(check_submission(&g, &s), Err(InteractionError::Invalid(_))));
    let mut s = submission(Vec::new());
    s.time_budget = Some(-1.0);
    assert!(matches!(check_submission(&g, &s), Err(InteractionError::Invalid(_))));
    let s = submission(vec![constraint("SVC", ConstraintAction::Use, true), constraint("SVC", ConstraintAction::Exclude, true)]);
    assert!(matches!(check_submission(&g, &s), Err(InteractionError::Contradiction(_))));
}

#[test]
fn annotation_shape() {
    let (schema, mut g) = world();
    let before = g.len();
    let task = next_task_id(&g);
    assert_eq!(task, da("task-00000"));
    let added = annotate_interaction(&schema, &mut g, &record(&task)).unwrap();
    assert_eq!(g.len(), before + added.len());
    assert_eq!(count(&g, prop::HAS_INTENT), 1);
    assert_eq!(count(&g, prop::HAS_REQUIREMENT), 1);
    assert_eq!(count(&g, prop::HAS_CONSTRAINT), 2);
    assert_eq!(count(&g, prop::HAS_STEP), 3);
    assert_eq!(count(&g, prop::FOLLOWED_BY), 2);
    assert_eq!(count(&g, prop::FEEDBACK_SCORE), 1);
    let soft = g.find(None, Some(&Term::Iri(prop::IS_HARD.into())), Some(&Term::boolean(false)));
    assert_eq!(soft.len(), 1);
    assert_eq!(next_task_id(&g), da("task-00001"));

    // Recording the same interaction again changes nothing.
    let len = g.len();
    annotate_interaction(&schema, &mut g, &record(&task)).unwrap();
    assert_eq!(g.len(), len);
}

#[test]
fn annotation_is_all_or_nothing() {
    let (schema, mut g) = world();
    let before = g.clone();
    let mut rec = record(&da("task-x"));
    rec.workflow.push(da("NotAnAlgorithm"));
    assert!(matches!(annotate_interaction(&schema, &mut g, &rec), Err(InteractionError::Violation(_))));
    assert_eq!(g, before);

    let mut rec = record(&da("task-y"));
    rec.feedback = Some(Feedback { score: 9, tags: Vec::new() });
    assert!(annotate_interaction(&schema, &mut g, &rec).is_err());
    assert_eq!(g, before);
}

#[test]
fn time_budget_is_a_workflow_constraint() {
    let (schema, mut g) = world();
    let mut rec = record(&da("task-b"));
    rec.submission.time_budget = Some(60.0);
    annotate_interaction(&schema, &mut g, &rec).unwrap();
    assert_eq!(g.instances_of(&Term::Iri(class::WORKFLOW_CONSTRAINT.into())).len(), 1);
    assert_eq!(count(&g, prop::HAS_CONSTRAINT), 3);
}

#[test]
fn recommendation_methods_and_fallbacks() {
    let (schema, mut g) = world();
    let ladder = Ladder::default();
    let opts = AnticipateOptions::default();
    let src = |g: &Graph| {
        let ctx = TaskContext::new(Term::Iri(da("ann"))).with_dataset(Term::Iri(da("D"))).with_intent(Term::Iri(da("Classification")));
        let sources = Sources { schema: &schema, graph: g, ladder: &ladder, state: None, options: &opts };
        (recommend(&sources, &ctx, Target::Metric, Method::Query, 3), recommend(&sources, &ctx, Target::Metric, Method::Auto, 3))
    };
    // Empty history and no embeddings: nothing to offer.
    let (q, a) = src(&g);
    assert!(q.is_err());
    assert!(matches!(a, Err(AnticipateError::Unavailable(_))));

    annotate_interaction(&schema, &mut g, &record(&da("task-00000"))).unwrap();
    let (q, a) = src(&g);
    let q = q.unwrap();
    assert_eq!((q.method, q.level_used), (Method::Query, Some(1)));
    assert_eq!(q.items[0].entity, Term::Iri(da("Accuracy")));
    assert_eq!(a.unwrap(), q);
}

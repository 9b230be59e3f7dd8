//! Submissions, the stand-in workflow executor, and recording a finished
//! interaction in the store.

use std::collections::BTreeSet;

use dakg_core::schema::AlgorithmKind;
use dakg_core::synth::pseudo_score;
use dakg_core::vocab::{class, da, prop, RDF_TYPE};
use dakg_core::{Graph, Schema, Term, Triple, Violation};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintAction {
    Use,
    Exclude,
}

impl ConstraintAction {
    fn as_str(self) -> &'static str {
        match self {
            ConstraintAction::Use => "use",
            ConstraintAction::Exclude => "exclude",
        }
    }
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintSpec {
    pub algorithm: String,
    pub action: ConstraintAction,
    /// A soft constraint is a preference.
    #[serde(default = "yes")]
    pub is_hard: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Submission {
    pub user: String,
    pub dataset: String,
    pub intent: String,
    pub metric: String,
    #[serde(default)]
    pub constraints: Vec<ConstraintSpec>,
    /// Seconds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_budget: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelEvaluation {
    pub metric: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feedback {
    /// 1 to 5.
    pub score: u8,
    #[serde(default)]
    pub tags: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub task: String,
    pub submission: Submission,
    /// Algorithms in execution order.
    pub workflow: Vec<String>,
    pub evaluation: ModelEvaluation,
    #[serde(default)]
    pub feedback: Option<Feedback>,
}

#[derive(Debug, Error)]
pub enum InteractionError {
    #[error("{0} is both required and excluded")]
    Contradiction(String),
    #[error("invalid submission: {0}")]
    Invalid(String),
    #[error(transparent)]
    Violation(#[from] Violation),
}

fn is_a(g: &Graph, entity: &str, class: &str) -> bool {
    g.is_instance_of(&Term::Iri(entity.to_string()), &Term::Iri(class.to_string()))
}

/// Checks that every IRI of `sub` names an instance of the right class and
/// that no algorithm is both required and excluded.
pub fn check_submission(g: &Graph, sub: &Submission) -> Result<(), InteractionError> {
    let checks = [
        (&sub.user, class::USER),
        (&sub.dataset, class::DATASET),
        (&sub.intent, class::INTENT),
        (&sub.metric, class::EVALUATION_REQUIREMENT),
    ];
    for (e, c) in checks {
        if !is_a(g, e, c) {
            return Err(InteractionError::Invalid(format!("{e} is not a {c}")));
        }
    }
    for c in &sub.constraints {
        if !is_a(g, &c.algorithm, class::ALGORITHM) {
            return Err(InteractionError::Invalid(format!("{} is not a {}", c.algorithm, class::ALGORITHM)));
        }
    }
    if let Some(b) = sub.time_budget {
        if !(b.is_finite() && b > 0.0) {
            return Err(InteractionError::Invalid(format!("time budget must be positive, got {b}")));
        }
    }
    let used: BTreeSet<&str> =
        sub.constraints.iter().filter(|c| c.action == ConstraintAction::Use).map(|c| c.algorithm.as_str()).collect();
    if let Some(c) = sub.constraints.iter().find(|c| c.action == ConstraintAction::Exclude && used.contains(c.algorithm.as_str())) {
        return Err(InteractionError::Contradiction(c.algorithm.clone()));
    }
    Ok(())
}

/// FNV-1a, so seeds do not depend on the standard library's hasher.
fn fnv(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ *b as u64).wrapping_mul(0x100_0000_01b3))
}

/// Deterministic pseudo-run of a submission: required preprocessing steps,
/// possibly one more preprocessing step, then the predictor. Required
/// algorithms always appear and excluded ones never do.
pub fn stub_execute(schema: &Schema, sub: &Submission, seed: u64) -> Result<(Vec<String>, ModelEvaluation), InteractionError> {
    let used: Vec<&str> =
        sub.constraints.iter().filter(|c| c.action == ConstraintAction::Use).map(|c| c.algorithm.as_str()).collect();
    let excluded: BTreeSet<&str> =
        sub.constraints.iter().filter(|c| c.action == ConstraintAction::Exclude).map(|c| c.algorithm.as_str()).collect();
    if let Some(a) = used.iter().find(|a| excluded.contains(*a)) {
        return Err(InteractionError::Contradiction(a.to_string()));
    }
    let key = serde_json::to_vec(sub).expect("submission serializes");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv(&key));
    let kind = |a: &str| schema.algorithm_kind(a);
    let pool = schema.algorithms_for(&sub.intent);
    let free = |k: AlgorithmKind| -> Vec<&String> {
        pool.iter().filter(|a| kind(a) == Some(k) && !excluded.contains(a.as_str()) && !used.contains(&a.as_str())).collect()
    };

    let mut steps: Vec<String> =
        used.iter().filter(|a| kind(a) == Some(AlgorithmKind::Preprocessing)).map(|a| a.to_string()).collect();
    if rng.random_bool(0.5) {
        if let Some(p) = free(AlgorithmKind::Preprocessing).choose(&mut rng) {
            steps.push(p.to_string());
        }
    }
    let models: Vec<String> =
        used.iter().filter(|a| kind(a) == Some(AlgorithmKind::Modeling)).map(|a| a.to_string()).collect();
    if models.is_empty() {
        let p = free(AlgorithmKind::Modeling)
            .choose(&mut rng)
            .map(|a| a.to_string())
            .ok_or_else(|| InteractionError::Invalid(format!("no modeling algorithm left for {}", sub.intent)))?;
        steps.push(p);
    } else {
        steps.extend(models);
    }
    let value = pseudo_score(&mut rng, &sub.metric);
    Ok((steps, ModelEvaluation { metric: sub.metric.clone(), value }))
}

/// Next unused task IRI.
pub fn next_task_id(g: &Graph) -> String {
    let mut n = g.instances_of(&Term::Iri(class::TASK.into())).len();
    loop {
        let id = da(&format!("task-{n:05}"));
        if g.find(Some(&Term::Iri(id.clone())), None, None).is_empty() {
            return id;
        }
        n += 1;
    }
}

/// Store triples for an interaction.
pub fn interaction_triples(rec: &InteractionRecord) -> Result<Vec<Triple>, InteractionError> {
    let sub = &rec.submission;
    if rec.evaluation.metric != sub.metric {
        return Err(InteractionError::Invalid("evaluation metric differs from the requested one".into()));
    }
    let task = &rec.task;
    let local = task.strip_prefix("da:").unwrap_or(task);
    let t = |r: &str, o: &str| Triple::iris(task, r, o);
    let mut out = vec![
        t(RDF_TYPE, class::TASK),
        t(prop::REQUESTED_BY, &sub.user),
        t(prop::USES_DATASET, &sub.dataset),
        t(prop::HAS_INTENT, &sub.intent),
        t(prop::HAS_REQUIREMENT, &sub.metric),
    ];
    for (i, c) in sub.constraints.iter().enumerate() {
        let ci = da(&format!("constraint-{local}-{i}"));
        out.push(t(prop::HAS_CONSTRAINT, &ci));
        out.push(Triple::iris(&ci, RDF_TYPE, class::ALGORITHM_CONSTRAINT));
        out.push(Triple::iris(&ci, prop::ON_ALGORITHM, &c.algorithm));
        out.push(Triple::with_literal(&ci, prop::CONSTRAINT_ACTION, Term::string(c.action.as_str())));
        out.push(Triple::with_literal(&ci, prop::IS_HARD, Term::boolean(c.is_hard)));
    }
    if let Some(b) = sub.time_budget {
        let ci = da(&format!("constraint-{local}-budget"));
        out.push(t(prop::HAS_CONSTRAINT, &ci));
        out.push(Triple::iris(&ci, RDF_TYPE, class::WORKFLOW_CONSTRAINT));
        out.push(Triple::with_literal(&ci, prop::RESOURCE_KEY, Term::string("timeBudgetSeconds")));
        out.push(Triple::with_literal(&ci, prop::RESOURCE_LIMIT, Term::float(b)));
        out.push(Triple::with_literal(&ci, prop::IS_HARD, Term::boolean(true)));
    }

    let wf = da(&format!("workflow-{local}"));
    out.push(t(prop::ACHIEVED_BY, &wf));
    out.push(Triple::iris(&wf, RDF_TYPE, class::WORKFLOW));
    let mut prev: Option<String> = None;
    for (i, alg) in rec.workflow.iter().enumerate() {
        let step = da(&format!("step-{local}-{i}"));
        out.push(Triple::iris(&wf, prop::HAS_STEP, &step));
        out.push(Triple::iris(&step, RDF_TYPE, class::STEP));
        out.push(Triple::iris(&step, prop::USES_ALGORITHM, alg));
        if let Some(p) = prev {
            out.push(Triple::iris(&p, prop::FOLLOWED_BY, &step));
        }
        prev = Some(step);
    }
    let ev = da(&format!("evaluation-{local}"));
    out.push(Triple::iris(&wf, prop::HAS_EVALUATION, &ev));
    out.push(Triple::iris(&ev, RDF_TYPE, class::MODEL_EVALUATION));
    out.push(Triple::iris(&ev, prop::SPECIFIED_METRIC, &rec.evaluation.metric));
    out.push(Triple::with_literal(&ev, prop::EVALUATION_VALUE, Term::float(rec.evaluation.value)));

    if let Some(f) = &rec.feedback {
        if !(1..=5).contains(&f.score) {
            return Err(InteractionError::Invalid(format!("feedback score must be 1 to 5, got {}", f.score)));
        }
        let fb = da(&format!("feedback-{local}"));
        out.push(Triple::iris(&wf, prop::HAS_FEEDBACK, &fb));
        out.push(Triple::iris(&fb, RDF_TYPE, class::FEEDBACK));
        out.push(Triple::with_literal(&fb, prop::FEEDBACK_SCORE, Term::integer(f.score as i64)));
        for tag in &f.tags {
            out.push(Triple::with_literal(&fb, prop::FEEDBACK_TAG, Term::string(tag)));
        }
    }
    Ok(out)
}

/// Adds an interaction to the store. Either every triple is added or, on a
/// schema violation, none is. Returns the emitted triples.
pub fn annotate_interaction(schema: &Schema, g: &mut Graph, rec: &InteractionRecord) -> Result<Vec<Triple>, InteractionError> {
    let triples = interaction_triples(rec)?;
    schema.validate_batch(g, &triples)?;
    g.extend(triples.iter().cloned()).map_err(|e| InteractionError::Invalid(e.to_string()))?;
    Ok(triples)
}

/// Adds a user entity unless it exists.
pub fn ensure_user(g: &mut Graph, user: &str) -> Result<bool, InteractionError> {
    let t = Triple::new(Term::iri(user).map_err(|e| InteractionError::Invalid(e.to_string()))?, Term::Iri(RDF_TYPE.into()), Term::Iri(class::USER.into()))
        .map_err(|e| InteractionError::Invalid(e.to_string()))?;
    if g.is_instance_of(&t.subject, &t.object) {
        return Ok(false);
    }
    g.add(t).map_err(|e| InteractionError::Invalid(e.to_string()))
}

//! Ranking candidate inputs for a task that is being specified.

use std::collections::{BTreeMap, BTreeSet};

use dakg_core::vocab::{class, prop, RDF_TYPE};
use dakg_core::{Graph, Ladder, LadderError, Schema, Target, TaskContext, Term};
use dakg_kge::{fine_tune, EmbeddingState, FineTuneConfig, NamedTriple, SHORTCUT_RELATION};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Name given to the task being specified while it is scored.
pub const PENDING_TASK: &str = "da:task-pending";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lp,
    Query,
    Auto,
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "lp" => Ok(Method::Lp),
            "query" => Ok(Method::Query),
            "auto" => Ok(Method::Auto),
            other => Err(format!("unknown method {other:?}; expected lp, query or auto")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredItem {
    pub entity: Term,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub target_relation: String,
    /// Best first; equal scores in IRI order.
    pub items: Vec<ScoredItem>,
    /// `lp` or `query`, never `auto`.
    pub method: Method,
    /// Ladder level that answered, for query recommendations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level_used: Option<u8>,
    pub context: TaskContext,
}

#[derive(Debug, Error)]
pub enum AnticipateError {
    #[error("unsupported relation {0}; supported: da:hasIntent, da:hasRequirement, da:hasConstraint, da:usesDataset")]
    UnsupportedRelation(String),
    #[error("no embeddings are loaded")]
    NoEmbeddings,
    #[error("the task context cannot be embedded: {0}")]
    Unembeddable(String),
    #[error("no recommendation available: the query ladder found no data and {0}")]
    Unavailable(String),
    #[error(transparent)]
    Ladder(#[from] LadderError),
    #[error(transparent)]
    Kge(#[from] dakg_kge::KgeError),
}

/// Knobs for link-prediction recommendations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnticipateOptions {
    /// Restrict candidates to schema-valid, context-consistent entities.
    pub filter: bool,
    /// Train the pending task in before scoring. Without it the task keeps
    /// its peer-average initialization.
    pub fine_tune: bool,
    pub fine_tune_config: FineTuneConfig,
}

impl Default for AnticipateOptions {
    fn default() -> Self {
        AnticipateOptions { filter: true, fine_tune: true, fine_tune_config: FineTuneConfig::default() }
    }
}

fn iri(s: &str) -> Term {
    Term::Iri(s.to_string())
}

/// The relation a target is predicted through.
pub fn lp_relation(target: Target) -> &'static str {
    match target {
        Target::Intent => prop::HAS_INTENT,
        Target::Metric => prop::HAS_REQUIREMENT,
        Target::Constraint => SHORTCUT_RELATION,
    }
}

/// Plausible objects of `relation` for the task described by `ctx`.
pub fn candidates_for(schema: &Schema, g: &Graph, ctx: &TaskContext, relation: &str) -> Result<BTreeSet<Term>, AnticipateError> {
    let intent = ctx.intent.as_ref().and_then(|i| i.as_iri());
    let pool = |c: &str| g.instances_of(&iri(c));
    Ok(match relation {
        prop::HAS_INTENT => pool(class::INTENT),
        prop::USES_DATASET => pool(class::DATASET),
        prop::HAS_REQUIREMENT => {
            let mut all = pool(class::EVALUATION_REQUIREMENT);
            if let Some(i) = intent {
                let allowed = schema.metrics_for(i);
                all.retain(|m| m.as_iri().is_some_and(|m| allowed.contains(m)));
            }
            all
        }
        prop::HAS_CONSTRAINT | SHORTCUT_RELATION => {
            let mut all = pool(class::ALGORITHM);
            if let Some(i) = intent {
                let allowed = schema.algorithms_for(i);
                all.retain(|a| a.as_iri().is_some_and(|a| allowed.contains(a)));
            }
            all
        }
        other => return Err(AnticipateError::UnsupportedRelation(other.to_string())),
    })
}

fn target_type(g: &Graph, dataset: &Term) -> Option<Term> {
    g.object(dataset, prop::TARGET_TYPE)
}

/// Past tasks whose vectors seed the pending task: the user's own tasks on
/// datasets with the same target type, else anyone's tasks on such
/// datasets, else the user's tasks.
fn task_peers(g: &Graph, ctx: &TaskContext) -> Vec<String> {
    let tasks = g.instances_of(&iri(class::TASK));
    let by_user: Vec<&Term> = tasks.iter().filter(|t| g.object(t, prop::REQUESTED_BY).as_ref() == Some(&ctx.user)).collect();
    let names = |v: Vec<&Term>| v.into_iter().filter_map(|t| t.as_iri().map(String::from)).collect::<Vec<_>>();
    if let Some(tt) = ctx.dataset.as_ref().and_then(|d| target_type(g, d)) {
        let same = |t: &&Term| g.object(t, prop::USES_DATASET).and_then(|d| target_type(g, &d)).as_ref() == Some(&tt);
        let mine: Vec<&Term> = by_user.iter().copied().filter(same).collect();
        if !mine.is_empty() {
            return names(mine);
        }
        let all: Vec<&Term> = tasks.iter().filter(same).collect();
        if !all.is_empty() {
            return names(all);
        }
    }
    names(by_user)
}

fn dataset_peers(g: &Graph, dataset: &Term) -> Vec<String> {
    let Some(tt) = target_type(g, dataset) else { return Vec::new() };
    g.subjects(prop::TARGET_TYPE, &tt).into_iter().filter(|d| d != dataset).filter_map(|d| d.as_iri().map(String::from)).collect()
}

/// View triples describing the pending task, plus the store triples of any
/// user or dataset the embeddings have not seen.
fn pending_triples(state: &EmbeddingState, g: &Graph, ctx: &TaskContext) -> Vec<NamedTriple> {
    let task = PENDING_TASK.to_string();
    let link = |r: &str, o: &Term| [task.clone(), r.to_string(), o.lexical().to_string()];
    let mut out = vec![[task.clone(), RDF_TYPE.to_string(), class::TASK.to_string()], link(prop::REQUESTED_BY, &ctx.user)];
    if let Some(d) = &ctx.dataset {
        out.push(link(prop::USES_DATASET, d));
    }
    if let Some(i) = &ctx.intent {
        out.push(link(prop::HAS_INTENT, i));
    }
    if let Some(m) = &ctx.metric {
        out.push(link(prop::HAS_REQUIREMENT, m));
    }
    for c in &ctx.constraints {
        out.push(link(SHORTCUT_RELATION, c));
    }
    for e in std::iter::once(&ctx.user).chain(&ctx.dataset) {
        if e.as_iri().is_some_and(|i| state.entities.get(i).is_none()) {
            out.extend(g.find(Some(e), None, None).iter().map(|t| state.view.map_triple(t)));
        }
    }
    out
}

/// Embeds the pending task for `ctx` into a copy of `state`.
pub fn embed_context(
    state: &EmbeddingState,
    g: &Graph,
    ctx: &TaskContext,
    opts: &AnticipateOptions,
) -> Result<EmbeddingState, AnticipateError> {
    let mut peers = BTreeMap::new();
    let tp = task_peers(g, ctx);
    let has_peers = tp.iter().any(|t| state.entities.get(t).is_some());
    peers.insert(PENDING_TASK.to_string(), tp);
    if let Some(d) = &ctx.dataset {
        peers.insert(d.lexical().to_string(), dataset_peers(g, d));
    }
    if !opts.fine_tune && !has_peers {
        return Err(AnticipateError::Unembeddable("no peer tasks to initialize from and fine-tuning is off".into()));
    }
    let ft = if opts.fine_tune { opts.fine_tune_config.clone() } else { FineTuneConfig { epochs: 0, ..opts.fine_tune_config.clone() } };
    Ok(fine_tune(state, &pending_triples(state, g, ctx), &ft, &peers)?)
}

/// Scores every candidate as the object of `relation` for the pending task
/// and returns the `k` best.
pub fn anticipate(
    state: &EmbeddingState,
    schema: &Schema,
    g: &Graph,
    ctx: &TaskContext,
    relation: &str,
    k: usize,
    opts: &AnticipateOptions,
) -> Result<Recommendation, AnticipateError> {
    let pool: Vec<Term> = if opts.filter {
        candidates_for(schema, g, ctx, relation)?.into_iter().collect()
    } else {
        candidates_for(schema, g, ctx, relation)?;
        state.entities.names().iter().map(|n| iri(n)).collect()
    };
    let s = embed_context(state, g, ctx, opts)?;
    let mut items: Vec<ScoredItem> = pool
        .into_iter()
        .filter_map(|c| {
            let score = s.score_names(PENDING_TASK, relation, c.lexical()).ok()?;
            Some(ScoredItem { entity: c, score })
        })
        .collect();
    items.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.entity.cmp(&b.entity)));
    items.truncate(k);
    Ok(Recommendation {
        target_relation: relation.to_string(),
        items,
        method: Method::Lp,
        level_used: None,
        context: ctx.clone(),
    })
}

/// Query-ladder recommendation in the common shape; counts become scores.
pub fn recommend_query(ladder: &Ladder, g: &Graph, ctx: &TaskContext, target: Target, k: usize) -> Result<Recommendation, AnticipateError> {
    let r = ladder.recommend(g, ctx, target, k)?;
    Ok(Recommendation {
        target_relation: target.relation().to_string(),
        items: r.items.into_iter().map(|(entity, n)| ScoredItem { entity, score: n as f64 }).collect(),
        method: Method::Query,
        level_used: Some(r.level_used),
        context: ctx.clone(),
    })
}

/// Everything a recommendation may draw on.
pub struct Sources<'a> {
    pub schema: &'a Schema,
    pub graph: &'a Graph,
    pub ladder: &'a Ladder,
    pub state: Option<&'a EmbeddingState>,
    pub options: &'a AnticipateOptions,
}

/// `auto` asks the ladder first and turns to link prediction when the
/// ladder has no data. `lp` falls back to the ladder when the context
/// cannot be embedded.
pub fn recommend(src: &Sources, ctx: &TaskContext, target: Target, method: Method, k: usize) -> Result<Recommendation, AnticipateError> {
    let lp = || -> Result<Recommendation, AnticipateError> {
        let state = src.state.ok_or(AnticipateError::NoEmbeddings)?;
        anticipate(state, src.schema, src.graph, ctx, lp_relation(target), k, src.options)
    };
    match method {
        Method::Query => recommend_query(src.ladder, src.graph, ctx, target, k),
        Method::Lp => match lp() {
            Err(AnticipateError::Unembeddable(_)) => recommend_query(src.ladder, src.graph, ctx, target, k),
            other => other,
        },
        Method::Auto => match recommend_query(src.ladder, src.graph, ctx, target, k) {
            Err(AnticipateError::Ladder(LadderError::NoData)) => {
                lp().map_err(|e| AnticipateError::Unavailable(e.to_string()))
            }
            other => other,
        },
    }
}

//! Query-based recommendation through a generalization ladder.
//!
//! Four template levels are tried in order, from the most specific (same
//! user and dataset) to the most general (all users). The first level whose
//! pattern has matches wins and its values are ranked by frequency.
//!
//! Templates are plain JSON. Placeholders `$user`, `$dataset`, `$intent` and
//! `$metric` are replaced with context values. A template referencing a
//! placeholder the context lacks is skipped, except that an atom using the
//! optional form (`$intent?`) is dropped instead.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::store::{Atom, Comparator, Filter, Graph, Node, Pattern, PatternError};
use crate::term::Term;
use crate::vocab::prop;

const DEFAULT_TEMPLATES: &str = include_str!("../templates/ladder.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Intent,
    Metric,
    Constraint,
}

impl Target {
    /// Relation from the task to the recommended value.
    pub fn relation(self) -> &'static str {
        match self {
            Target::Intent => prop::HAS_INTENT,
            Target::Metric => prop::HAS_REQUIREMENT,
            Target::Constraint => prop::HAS_CONSTRAINT,
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::Intent => "intent",
            Target::Metric => "metric",
            Target::Constraint => "constraint",
        })
    }
}

impl FromStr for Target {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "intent" => Ok(Target::Intent),
            "metric" => Ok(Target::Metric),
            "constraint" => Ok(Target::Constraint),
            other => Err(format!("unknown target {other:?}; expected intent, metric or constraint")),
        }
    }
}

/// Restrictions on the population of past tasks, applied at every level.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LadderFilters {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expertise: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_instances: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_instances: Option<i64>,
}

impl LadderFilters {
    pub fn is_empty(&self) -> bool {
        self == &LadderFilters::default()
    }
}

/// What is known about the task being specified.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskContext {
    pub user: Term,
    #[serde(default)]
    pub dataset: Option<Term>,
    #[serde(default)]
    pub intent: Option<Term>,
    #[serde(default)]
    pub metric: Option<Term>,
    #[serde(default)]
    pub constraints: BTreeSet<Term>,
    #[serde(default)]
    pub filters: LadderFilters,
}

impl TaskContext {
    pub fn new(user: Term) -> Self {
        TaskContext {
            user,
            dataset: None,
            intent: None,
            metric: None,
            constraints: BTreeSet::new(),
            filters: LadderFilters::default(),
        }
    }

    pub fn with_dataset(mut self, d: Term) -> Self {
        self.dataset = Some(d);
        self
    }

    pub fn with_intent(mut self, i: Term) -> Self {
        self.intent = Some(i);
        self
    }

    fn placeholder(&self, name: &str) -> Option<&Term> {
        match name {
            "user" => Some(&self.user),
            "dataset" => self.dataset.as_ref(),
            "intent" => self.intent.as_ref(),
            "metric" => self.metric.as_ref(),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Template {
    pub target: Target,
    pub level: u8,
    pub select: String,
    pub atoms: Vec<[String; 3]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderResult {
    pub items: Vec<(Term, usize)>,
    pub level_used: u8,
    pub template_id: String,
}

#[derive(Debug, Error, PartialEq)]
pub enum LadderError {
    /// Every level came back empty; the caller should fall back.
    #[error("no data at any ladder level")]
    NoData,
    #[error("unknown user {0}")]
    UnknownUser(Term),
    #[error("an intent must be fixed to recommend a {0}")]
    IntentRequired(Target),
    #[error("k must be positive")]
    ZeroK,
    #[error("template {id}: {reason}")]
    BadTemplate { id: String, reason: String },
    #[error(transparent)]
    Pattern(#[from] PatternError),
}

/// Named templates grouped by target and ordered by level.
#[derive(Clone, Debug)]
pub struct Ladder {
    templates: BTreeMap<String, Template>,
}

impl Default for Ladder {
    fn default() -> Self {
        Ladder::from_json(DEFAULT_TEMPLATES).expect("bundled templates parse")
    }
}

impl Ladder {
    /// Parses a JSON object mapping template id to template.
    pub fn from_json(text: &str) -> Result<Self, LadderError> {
        let templates: BTreeMap<String, Template> = serde_json::from_str(text)
            .map_err(|e| LadderError::BadTemplate { id: "<file>".into(), reason: e.to_string() })?;
        for (id, t) in &templates {
            if !(1..=4).contains(&t.level) {
                return Err(LadderError::BadTemplate { id: id.clone(), reason: "level must be 1-4".into() });
            }
            for [s, r, o] in &t.atoms {
                for n in [s, r, o] {
                    if !n.starts_with('$') {
                        Node::parse(n).map_err(|e| LadderError::BadTemplate { id: id.clone(), reason: e.to_string() })?;
                    }
                }
            }
            if !t.atoms.iter().flatten().any(|n| n.trim_start_matches('?') == t.select && n.starts_with('?')) {
                return Err(LadderError::BadTemplate { id: id.clone(), reason: format!("?{} is never bound", t.select) });
            }
        }
        Ok(Ladder { templates })
    }

    pub fn templates(&self) -> &BTreeMap<String, Template> {
        &self.templates
    }

    /// Templates for `target` in ladder order.
    fn levels(&self, target: Target) -> Vec<(&String, &Template)> {
        let mut v: Vec<_> = self.templates.iter().filter(|(_, t)| t.target == target).collect();
        v.sort_by(|a, b| a.1.level.cmp(&b.1.level).then_with(|| a.0.cmp(b.0)));
        v
    }

    /// Instantiates a template for a context. `None` means the template
    /// needs a placeholder the context does not provide.
    pub fn instantiate(&self, id: &str, ctx: &TaskContext) -> Result<Option<Pattern>, LadderError> {
        let t = self
            .templates
            .get(id)
            .ok_or_else(|| LadderError::BadTemplate { id: id.into(), reason: "no such template".into() })?;
        let mut atoms = Vec::new();
        'atoms: for raw in &t.atoms {
            let mut nodes = Vec::with_capacity(3);
            for n in raw {
                if let Some(name) = n.strip_prefix('$') {
                    let (name, optional) = match name.strip_suffix('?') {
                        Some(base) => (base, true),
                        None => (name, false),
                    };
                    match ctx.placeholder(name) {
                        Some(term) => nodes.push(Node::Term(term.clone())),
                        None if optional => continue 'atoms,
                        None => return Ok(None),
                    }
                } else {
                    nodes.push(Node::parse(n)?);
                }
            }
            let [s, r, o]: [Node; 3] = nodes.try_into().expect("three nodes");
            atoms.push(Atom::new(s, r, o));
        }

        let mut p = Pattern::new(atoms).grouped_by(&t.select);
        let task_var = t.atoms.iter().find_map(|[s, _, _]| s.strip_prefix('?')).unwrap_or("t").to_string();
        let f = &ctx.filters;
        if let Some(level) = &f.expertise {
            let user_node = if t.atoms.iter().any(|a| a[2] == "?u") { Node::var("u") } else { Node::Term(ctx.user.clone()) };
            p.atoms.push(Atom::new(user_node, Node::iri(prop::HAS_EXPERTISE), Node::Term(Term::string(level))));
        }
        if f.min_instances.is_some() || f.max_instances.is_some() {
            p.atoms.push(Atom::new(Node::var(&task_var), Node::iri(prop::USES_DATASET), Node::var("_d")));
            p.atoms.push(Atom::new(Node::var("_d"), Node::iri(prop::N_INSTANCES), Node::var("_n")));
            if let Some(lo) = f.min_instances {
                p = p.with_filter(Filter::new("_n", Comparator::Ge, Term::integer(lo)));
            }
            if let Some(hi) = f.max_instances {
                p = p.with_filter(Filter::new("_n", Comparator::Le, Term::integer(hi)));
            }
        }
        Ok(Some(p))
    }

    /// Walks the ladder for `target` and returns the first non-empty top-k.
    pub fn recommend(&self, g: &Graph, ctx: &TaskContext, target: Target, k: usize) -> Result<LadderResult, LadderError> {
        if k == 0 {
            return Err(LadderError::ZeroK);
        }
        if target == Target::Metric && ctx.intent.is_none() {
            return Err(LadderError::IntentRequired(target));
        }
        if g.find(Some(&ctx.user), None, None).is_empty() {
            return Err(LadderError::UnknownUser(ctx.user.clone()));
        }
        for (id, t) in self.levels(target) {
            let Some(p) = self.instantiate(id, ctx)? else { continue };
            let items = g.rank_by_frequency(&p, &t.select, k)?;
            if !items.is_empty() {
                return Ok(LadderResult { items, level_used: t.level, template_id: id.clone() });
            }
        }
        Err(LadderError::NoData)
    }
}

/// Shorthand for [`Ladder::recommend`] with the bundled templates.
pub fn recommend_by_query(g: &Graph, ctx: &TaskContext, target: Target, k: usize) -> Result<LadderResult, LadderError> {
    Ladder::default().recommend(g, ctx, target, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_templates_cover_every_level() {
        let l = Ladder::default();
        for target in [Target::Intent, Target::Metric, Target::Constraint] {
            let levels: Vec<u8> = l.levels(target).iter().map(|(_, t)| t.level).collect();
            assert_eq!(levels, vec![1, 2, 3, 4]);
        }
    }

    #[test]
    fn missing_dataset_skips_dataset_levels() {
        let l = Ladder::default();
        let ctx = TaskContext::new(Term::Iri("da:u".into())).with_intent(Term::Iri("da:Classification".into()));
        assert!(l.instantiate("metric-L1", &ctx).unwrap().is_none());
        assert!(l.instantiate("metric-L2", &ctx).unwrap().is_some());
    }

    #[test]
    fn optional_placeholder_drops_atom() {
        let l = Ladder::default();
        let ctx = TaskContext::new(Term::Iri("da:u".into()));
        let p = l.instantiate("constraint-L2", &ctx).unwrap().unwrap();
        assert_eq!(p.atoms.len(), 3);
    }

    #[test]
    fn rejects_unbound_select() {
        let bad = r#"{"x": {"target": "intent", "level": 1, "select": "y", "atoms": [["?t", "da:hasIntent", "?x"]]}}"#;
        assert!(matches!(Ladder::from_json(bad), Err(LadderError::BadTemplate { .. })));
    }

    #[test]
    fn target_parsing() {
        assert_eq!("metric".parse::<Target>(), Ok(Target::Metric));
        assert!("flavour".parse::<Target>().is_err());
    }
}

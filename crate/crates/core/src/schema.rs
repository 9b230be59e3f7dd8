//! The data-analytics ontology: classes, properties with domain/range, the
//! intent hierarchy (intent → ML task → algorithm → implementation) and the
//! metric pools, plus triple validation against them.
//!
//! The content is a curated, hand-written subset. It is built once by
//! [`Schema::bootstrap`] and never mutated afterwards.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::store::Graph;
use crate::term::{Datatype, Term, Triple};
use crate::vocab::{class, prop, *};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassDef {
    pub iri: String,
    pub superclass: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Range {
    Class(String),
    Literal(Datatype),
}

impl fmt::Display for Range {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Range::Class(c) => f.write_str(c),
            Range::Literal(dt) => f.write_str(dt.iri()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropertyDef {
    pub iri: String,
    pub domain: String,
    pub range: Range,
    pub functional: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum IntentLevel {
    Intent,
    MlTask,
    Algorithm,
    Implementation,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntentNode {
    pub iri: String,
    pub level: IntentLevel,
    pub parents: Vec<String>,
}

/// Why a triple does not fit the schema.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("unknown relation {0}")]
    UnknownRelation(String),
    #[error("unknown class {0}")]
    UnknownClass(String),
    #[error("{relation}: subject {subject} is not a {expected}")]
    DomainMismatch { relation: String, subject: String, expected: String },
    #[error("{relation}: object {object} is not a {expected}")]
    RangeMismatch { relation: String, object: String, expected: String },
    #[error("{relation} is functional but {subject} already has {existing}")]
    FunctionalDuplicate { relation: String, subject: String, existing: String },
}

/// Five top-level analytical intents.
pub const INTENT_ROOTS: [&str; 5] = ["Describe", "Assess", "Explain", "Predict", "Suggest"];

/// ML task → parent intent.
const ML_TASKS: &[(&str, &str)] = &[
    ("Classification", "Predict"),
    ("Regression", "Predict"),
    ("Forecasting", "Predict"),
    ("Clustering", "Describe"),
    ("Summarize", "Explain"),
    ("Analyze", "Explain"),
    ("Validate", "Assess"),
    ("Compare", "Assess"),
];

/// Algorithm kind of a curated algorithm entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlgorithmKind {
    Modeling,
    Preprocessing,
}

struct AlgorithmSpec {
    name: &'static str,
    kind: AlgorithmKind,
    tasks: &'static [&'static str],
    implementation: &'static str,
    hyperparameters: &'static [(&'static str, &'static str)],
    handles_categorical: Option<bool>,
}

const fn alg(
    name: &'static str,
    kind: AlgorithmKind,
    tasks: &'static [&'static str],
    implementation: &'static str,
    hyperparameters: &'static [(&'static str, &'static str)],
    handles_categorical: Option<bool>,
) -> AlgorithmSpec {
    AlgorithmSpec { name, kind, tasks, implementation, hyperparameters, handles_categorical }
}

use AlgorithmKind::{Modeling as M, Preprocessing as P};

const CLS: &[&str] = &["Classification"];
const REG: &[&str] = &["Regression"];
const PRE: &[&str] = &["Classification", "Regression"];

const ALGORITHMS: &[AlgorithmSpec] = &[
    alg("SVC", M, CLS, "sklearn.svm.SVC", &[("C", "1.0"), ("kernel", "rbf"), ("gamma", "scale")], Some(false)),
    alg("KNeighborsClassifier", M, CLS, "sklearn.neighbors.KNeighborsClassifier", &[("n_neighbors", "5"), ("weights", "uniform")], Some(false)),
    alg("LogisticRegression", M, &["Classification", "Analyze"], "sklearn.linear_model.LogisticRegression", &[("C", "1.0"), ("penalty", "l2")], Some(false)),
    alg("RandomForest", M, CLS, "sklearn.ensemble.RandomForestClassifier", &[("n_estimators", "100"), ("max_depth", "None")], Some(true)),
    alg("DecisionTreeClassifier", M, CLS, "sklearn.tree.DecisionTreeClassifier", &[("max_depth", "None"), ("criterion", "gini")], Some(true)),
    alg("GaussianNB", M, CLS, "sklearn.naive_bayes.GaussianNB", &[("var_smoothing", "1e-9")], None),
    alg("GradientBoostingClassifier", M, CLS, "sklearn.ensemble.GradientBoostingClassifier", &[("learning_rate", "0.1"), ("n_estimators", "100")], Some(true)),
    alg("MLPClassifier", M, CLS, "sklearn.neural_network.MLPClassifier", &[("hidden_layer_sizes", "100"), ("alpha", "0.0001")], None),
    alg("SVR", M, REG, "sklearn.svm.SVR", &[("C", "1.0"), ("epsilon", "0.1"), ("kernel", "rbf")], Some(false)),
    alg("SGDRegressor", M, REG, "sklearn.linear_model.SGDRegressor", &[("alpha", "0.0001"), ("penalty", "l2")], None),
    alg("KNeighborsRegressor", M, REG, "sklearn.neighbors.KNeighborsRegressor", &[("n_neighbors", "5")], None),
    alg("MLPRegressor", M, REG, "sklearn.neural_network.MLPRegressor", &[("hidden_layer_sizes", "100"), ("alpha", "0.0001")], None),
    alg("RandomForestRegressor", M, REG, "sklearn.ensemble.RandomForestRegressor", &[("n_estimators", "100"), ("max_depth", "None")], Some(true)),
    alg("LinearRegression", M, &["Regression", "Analyze"], "sklearn.linear_model.LinearRegression", &[("fit_intercept", "True")], None),
    alg("Ridge", M, REG, "sklearn.linear_model.Ridge", &[("alpha", "1.0")], None),
    alg("DecisionTreeRegressor", M, REG, "sklearn.tree.DecisionTreeRegressor", &[("max_depth", "None")], Some(true)),
    alg("GradientBoostingRegressor", M, REG, "sklearn.ensemble.GradientBoostingRegressor", &[("learning_rate", "0.1")], Some(true)),
    alg("KMeans", M, &["Clustering"], "sklearn.cluster.KMeans", &[("n_clusters", "8")], None),
    alg("DBSCAN", M, &["Clustering"], "sklearn.cluster.DBSCAN", &[("eps", "0.5")], None),
    alg("AgglomerativeClustering", M, &["Clustering"], "sklearn.cluster.AgglomerativeClustering", &[("linkage", "ward")], None),
    alg("NoPreprocessing", P, PRE, "identity", &[], None),
    alg("Normalizer", P, PRE, "sklearn.preprocessing.Normalizer", &[("norm", "l2")], None),
    alg("StandardScaler", P, PRE, "sklearn.preprocessing.StandardScaler", &[("with_mean", "True")], None),
    alg("MinMaxScaler", P, PRE, "sklearn.preprocessing.MinMaxScaler", &[("feature_range", "(0,1)")], None),
    alg("PCA", P, &["Classification", "Regression", "Summarize"], "sklearn.decomposition.PCA", &[("n_components", "None")], None),
    alg("SelectKBest", P, PRE, "sklearn.feature_selection.SelectKBest", &[("k", "10")], None),
];

/// Evaluation requirement → ML task it applies to.
const METRICS: &[(&str, &str)] = &[
    ("Accuracy", "Classification"),
    ("F1-Score", "Classification"),
    ("AUC", "Classification"),
    ("Precision", "Classification"),
    ("Recall", "Classification"),
    ("BalancedAccuracy", "Classification"),
    ("R2", "Regression"),
    ("MSE", "Regression"),
    ("RMSE", "Regression"),
    ("MAE", "Regression"),
    ("SilhouetteScore", "Clustering"),
];

fn classes() -> Vec<ClassDef> {
    use class::*;
    let top = [
        TASK,
        USER,
        INTENT,
        WORKFLOW,
        DATASET,
        STEP,
        ALGORITHM,
        IMPLEMENTATION,
        HYPERPARAMETER,
        CONSTRAINT,
        EVALUATION_REQUIREMENT,
        MODEL_EVALUATION,
        FEEDBACK,
        DATASET_CHARACTERISTICS,
    ];
    let sub = [
        (ML_TASK, INTENT),
        (MODELING_ALGORITHM, ALGORITHM),
        (PREPROCESSING_ALGORITHM, ALGORITHM),
        (ALGORITHM_CONSTRAINT, CONSTRAINT),
        (HYPERPARAMETER_CONSTRAINT, CONSTRAINT),
        (WORKFLOW_CONSTRAINT, CONSTRAINT),
    ];
    top.iter()
        .map(|c| ClassDef { iri: c.to_string(), superclass: None })
        .chain(sub.iter().map(|(c, s)| ClassDef { iri: c.to_string(), superclass: Some(s.to_string()) }))
        .collect()
}

fn properties() -> Vec<PropertyDef> {
    use class::*;
    use prop::*;
    use Datatype::*;
    let c = |s: &str| Range::Class(s.to_string());
    let l = Range::Literal;
    let defs: Vec<(&str, &str, Range, bool)> = vec![
        (REQUESTED_BY, TASK, c(USER), true),
        (HAS_INTENT, TASK, c(INTENT), true),
        (HAS_REQUIREMENT, TASK, c(EVALUATION_REQUIREMENT), false),
        (HAS_CONSTRAINT, TASK, c(CONSTRAINT), false),
        (USES_DATASET, TASK, c(DATASET), true),
        (ACHIEVED_BY, TASK, c(WORKFLOW), false),
        (HAS_STEP, WORKFLOW, c(STEP), false),
        (FOLLOWED_BY, STEP, c(STEP), false),
        (USES_ALGORITHM, STEP, c(ALGORITHM), true),
        (HAS_EVALUATION, WORKFLOW, c(MODEL_EVALUATION), false),
        (HAS_FEEDBACK, WORKFLOW, c(FEEDBACK), false),
        (IS_HARD, CONSTRAINT, l(Boolean), true),
        (ON_ALGORITHM, ALGORITHM_CONSTRAINT, c(ALGORITHM), true),
        (CONSTRAINT_ACTION, ALGORITHM_CONSTRAINT, l(String), true),
        (ON_HYPERPARAMETER, HYPERPARAMETER_CONSTRAINT, c(HYPERPARAMETER), true),
        (COMPARATOR, HYPERPARAMETER_CONSTRAINT, l(String), true),
        (CONSTRAINT_VALUE, HYPERPARAMETER_CONSTRAINT, l(Float), true),
        (RESOURCE_KEY, WORKFLOW_CONSTRAINT, l(String), true),
        (RESOURCE_LIMIT, WORKFLOW_CONSTRAINT, l(Float), true),
        (SPECIFIED_METRIC, MODEL_EVALUATION, c(EVALUATION_REQUIREMENT), true),
        (EVALUATION_VALUE, MODEL_EVALUATION, l(Float), true),
        (FEEDBACK_SCORE, FEEDBACK, l(Integer), true),
        (FEEDBACK_TAG, FEEDBACK, l(String), false),
        (HAS_HYPERPARAMETER, ALGORITHM, c(HYPERPARAMETER), false),
        (DEFAULT_VALUE, HYPERPARAMETER, l(String), true),
        (HANDLES_CATEGORICAL, ALGORITHM, l(Boolean), true),
        (TOLERATES_MISSING, ALGORITHM, l(Boolean), true),
        (HAS_CHARACTERISTIC, DATASET, c(DATASET_CHARACTERISTICS), false),
        (REFINES_INTENT, ML_TASK, c(INTENT), true),
        (ADDRESSES_TASK, ALGORITHM, c(ML_TASK), false),
        (IMPLEMENTS, IMPLEMENTATION, c(ALGORITHM), false),
        (METRIC_FOR, EVALUATION_REQUIREMENT, c(ML_TASK), false),
        (HAS_EXPERTISE, USER, l(String), true),
        (DATASET_NAME, DATASET, l(String), true),
        (N_INSTANCES, DATASET, l(Integer), true),
        (N_FEATURES, DATASET, l(Integer), true),
        (N_NUMERIC, DATASET, l(Integer), true),
        (N_CATEGORICAL, DATASET, l(Integer), true),
        (PCT_MISSING, DATASET, l(Float), true),
        (N_CLASSES, DATASET, l(Integer), true),
        (IMBALANCE, DATASET, l(Float), true),
        (STD_TARGET, DATASET, l(Float), true),
        (TARGET_TYPE, DATASET, l(String), true),
    ];
    defs.into_iter()
        .map(|(iri, domain, range, functional)| PropertyDef {
            iri: iri.to_string(),
            domain: domain.to_string(),
            range,
            functional,
        })
        .collect()
}

/// Relations describing the schema itself rather than instance data.
const META_RELATIONS: [&str; 3] = [RDFS_SUBCLASS_OF, RDFS_DOMAIN, RDFS_RANGE];

#[derive(Clone, Debug)]
pub struct Schema {
    classes: BTreeMap<String, ClassDef>,
    properties: BTreeMap<String, PropertyDef>,
    hierarchy: BTreeMap<String, IntentNode>,
    metrics: BTreeMap<String, Vec<String>>,
    graph: Graph,
}

/// Emits the bootstrapped schema as triples.
pub fn bootstrap_schema() -> Graph {
    Schema::bootstrap().graph().clone()
}

impl Schema {
    pub fn bootstrap() -> Self {
        let classes: BTreeMap<String, ClassDef> = classes().into_iter().map(|c| (c.iri.clone(), c)).collect();
        let properties: BTreeMap<String, PropertyDef> =
            properties().into_iter().map(|p| (p.iri.clone(), p)).collect();

        let mut hierarchy = BTreeMap::new();
        for root in INTENT_ROOTS {
            hierarchy.insert(da(root), IntentNode { iri: da(root), level: IntentLevel::Intent, parents: vec![] });
        }
        for (task, parent) in ML_TASKS {
            hierarchy.insert(da(task), IntentNode { iri: da(task), level: IntentLevel::MlTask, parents: vec![da(parent)] });
        }
        for a in ALGORITHMS {
            hierarchy.insert(
                da(a.name),
                IntentNode {
                    iri: da(a.name),
                    level: IntentLevel::Algorithm,
                    parents: a.tasks.iter().map(|t| da(t)).collect(),
                },
            );
            hierarchy.insert(
                da(a.implementation),
                IntentNode { iri: da(a.implementation), level: IntentLevel::Implementation, parents: vec![da(a.name)] },
            );
        }
        let mut metrics: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (m, task) in METRICS {
            metrics.entry(da(task)).or_default().push(da(m));
        }

        let mut schema = Schema { classes, properties, hierarchy, metrics, graph: Graph::new() };
        schema.graph = schema.emit();
        schema
    }

    fn emit(&self) -> Graph {
        let mut out = Vec::new();
        let ty = |s: &str, c: &str| Triple::iris(s, RDF_TYPE, c);
        for c in self.classes.values() {
            out.push(ty(&c.iri, RDFS_CLASS));
            if let Some(s) = &c.superclass {
                out.push(Triple::iris(&c.iri, RDFS_SUBCLASS_OF, s));
            }
        }
        for p in self.properties.values() {
            out.push(ty(&p.iri, RDF_PROPERTY));
            out.push(Triple::iris(&p.iri, RDFS_DOMAIN, &p.domain));
            let range = match &p.range {
                Range::Class(c) => c.as_str(),
                Range::Literal(dt) => dt.iri(),
            };
            out.push(Triple::iris(&p.iri, RDFS_RANGE, range));
            if p.functional {
                out.push(ty(&p.iri, OWL_FUNCTIONAL));
            }
        }
        for root in INTENT_ROOTS {
            out.push(ty(&da(root), class::INTENT));
        }
        for (task, parent) in ML_TASKS {
            out.push(ty(&da(task), class::ML_TASK));
            out.push(Triple::iris(&da(task), prop::REFINES_INTENT, &da(parent)));
        }
        for a in ALGORITHMS {
            let iri = da(a.name);
            let kind = match a.kind {
                AlgorithmKind::Modeling => class::MODELING_ALGORITHM,
                AlgorithmKind::Preprocessing => class::PREPROCESSING_ALGORITHM,
            };
            out.push(ty(&iri, kind));
            for t in a.tasks {
                out.push(Triple::iris(&iri, prop::ADDRESSES_TASK, &da(t)));
            }
            let imp = da(a.implementation);
            out.push(ty(&imp, class::IMPLEMENTATION));
            out.push(Triple::iris(&imp, prop::IMPLEMENTS, &iri));
            for (hp, default) in a.hyperparameters {
                let hp_iri = da(&format!("{}.{}", a.name, hp));
                out.push(ty(&hp_iri, class::HYPERPARAMETER));
                out.push(Triple::iris(&iri, prop::HAS_HYPERPARAMETER, &hp_iri));
                out.push(Triple::with_literal(&hp_iri, prop::DEFAULT_VALUE, Term::string(*default)));
            }
            if let Some(h) = a.handles_categorical {
                out.push(Triple::with_literal(&iri, prop::HANDLES_CATEGORICAL, Term::boolean(h)));
            }
        }
        for (m, task) in METRICS {
            out.push(ty(&da(m), class::EVALUATION_REQUIREMENT));
            out.push(Triple::iris(&da(m), prop::METRIC_FOR, &da(task)));
        }
        Graph::from_triples(out).expect("schema triples are well-formed")
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn classes(&self) -> impl Iterator<Item = &ClassDef> {
        self.classes.values()
    }

    pub fn properties(&self) -> impl Iterator<Item = &PropertyDef> {
        self.properties.values()
    }

    pub fn property(&self, iri: &str) -> Option<&PropertyDef> {
        self.properties.get(iri)
    }

    pub fn hierarchy(&self) -> impl Iterator<Item = &IntentNode> {
        self.hierarchy.values()
    }

    pub fn node(&self, iri: &str) -> Option<&IntentNode> {
        self.hierarchy.get(iri)
    }

    pub fn is_class(&self, iri: &str) -> bool {
        self.classes.contains_key(iri)
    }

    /// Whether `sub` equals `sup` or is a transitive subclass of it.
    pub fn is_subclass(&self, sub: &str, sup: &str) -> bool {
        let mut cur = Some(sub);
        while let Some(c) = cur {
            if c == sup {
                return true;
            }
            cur = self.classes.get(c).and_then(|d| d.superclass.as_deref());
        }
        false
    }

    pub fn algorithm_kind(&self, algorithm: &str) -> Option<AlgorithmKind> {
        ALGORITHMS.iter().find(|a| da(a.name) == algorithm).map(|a| a.kind)
    }

    /// All algorithm IRIs in the hierarchy.
    pub fn algorithms(&self) -> BTreeSet<String> {
        self.level(IntentLevel::Algorithm)
    }

    pub fn ml_tasks(&self) -> BTreeSet<String> {
        self.level(IntentLevel::MlTask)
    }

    fn level(&self, level: IntentLevel) -> BTreeSet<String> {
        self.hierarchy.values().filter(|n| n.level == level).map(|n| n.iri.clone()).collect()
    }

    /// Algorithms reachable below an intent, ML task or algorithm node.
    pub fn algorithms_for(&self, node: &str) -> BTreeSet<String> {
        let Some(n) = self.hierarchy.get(node) else { return BTreeSet::new() };
        match n.level {
            IntentLevel::Algorithm => BTreeSet::from([n.iri.clone()]),
            IntentLevel::Implementation => BTreeSet::new(),
            IntentLevel::MlTask | IntentLevel::Intent => {
                let tasks = self.tasks_under(node);
                self.hierarchy
                    .values()
                    .filter(|a| a.level == IntentLevel::Algorithm && a.parents.iter().any(|p| tasks.contains(p)))
                    .map(|a| a.iri.clone())
                    .collect()
            }
        }
    }

    /// ML tasks at or below an intent / ML task node.
    pub fn tasks_under(&self, node: &str) -> BTreeSet<String> {
        match self.hierarchy.get(node).map(|n| n.level) {
            Some(IntentLevel::MlTask) => BTreeSet::from([node.to_string()]),
            Some(IntentLevel::Intent) => self
                .hierarchy
                .values()
                .filter(|t| t.level == IntentLevel::MlTask && t.parents.iter().any(|p| p == node))
                .map(|t| t.iri.clone())
                .collect(),
            _ => BTreeSet::new(),
        }
    }

    /// Top-level intents an algorithm (or task, or implementation) can serve.
    pub fn intents_for(&self, node: &str) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut stack = vec![node.to_string()];
        let mut seen = BTreeSet::new();
        while let Some(n) = stack.pop() {
            if !seen.insert(n.clone()) {
                continue;
            }
            let Some(def) = self.hierarchy.get(&n) else { continue };
            if def.level == IntentLevel::Intent {
                out.insert(n);
            } else {
                stack.extend(def.parents.iter().cloned());
            }
        }
        out
    }

    /// Evaluation requirements suited to an intent or ML task.
    pub fn metrics_for(&self, node: &str) -> BTreeSet<String> {
        self.tasks_under(node).iter().flat_map(|t| self.metrics.get(t).into_iter().flatten().cloned()).collect()
    }

    pub fn all_metrics(&self) -> BTreeSet<String> {
        self.metrics.values().flatten().cloned().collect()
    }

    /// Checks one triple against the schema, looking up entity types in `g`.
    /// A functional property is violated when `g` holds a different object for
    /// the same subject.
    pub fn validate(&self, g: &Graph, t: &Triple) -> Result<(), Violation> {
        let rel = t.relation.lexical();
        if rel == RDF_TYPE {
            let c = t.object.lexical();
            return if t.object.is_iri() && (self.is_class(c) || [RDFS_CLASS, RDF_PROPERTY, OWL_FUNCTIONAL].contains(&c)) {
                Ok(())
            } else {
                Err(Violation::UnknownClass(c.to_string()))
            };
        }
        if META_RELATIONS.contains(&rel) {
            let s = t.subject.lexical();
            return if self.is_class(s) || self.properties.contains_key(s) {
                Ok(())
            } else {
                Err(Violation::UnknownClass(s.to_string()))
            };
        }
        let Some(p) = self.properties.get(rel) else {
            return Err(Violation::UnknownRelation(rel.to_string()));
        };
        if !self.has_type(g, &t.subject, &p.domain) {
            return Err(Violation::DomainMismatch {
                relation: rel.to_string(),
                subject: t.subject.lexical().to_string(),
                expected: p.domain.clone(),
            });
        }
        let range_ok = match (&p.range, &t.object) {
            (Range::Class(c), obj @ Term::Iri(_)) => self.has_type(g, obj, c),
            (Range::Literal(dt), Term::Literal { datatype, .. }) => {
                dt == datatype || (*dt == Datatype::Float && *datatype == Datatype::Integer)
            }
            _ => false,
        };
        if !range_ok {
            return Err(Violation::RangeMismatch {
                relation: rel.to_string(),
                object: t.object.to_string(),
                expected: p.range.to_string(),
            });
        }
        if p.functional {
            if let Some(existing) = g.objects(&t.subject, rel).into_iter().find(|o| o != &t.object) {
                return Err(Violation::FunctionalDuplicate {
                    relation: rel.to_string(),
                    subject: t.subject.lexical().to_string(),
                    existing: existing.to_string(),
                });
            }
        }
        Ok(())
    }

    /// Validates a batch as if it were added to `g` at once: types declared
    /// anywhere in the batch count, and functional properties may hold only one
    /// object across store and batch.
    pub fn validate_batch(&self, g: &Graph, triples: &[Triple]) -> Result<(), Violation> {
        let mut scratch = g.clone();
        for t in triples {
            // Malformed terms cannot be represented; report them as unknown relations.
            scratch.add(t.clone()).map_err(|e| Violation::UnknownRelation(e.to_string()))?;
        }
        triples.iter().try_for_each(|t| self.validate(&scratch, t))
    }

    fn has_type(&self, g: &Graph, entity: &Term, class: &str) -> bool {
        g.types_of(entity).iter().any(|ty| self.is_subclass(ty.lexical(), class))
    }

    /// Kahn topological sort over subclass edges and intent-hierarchy parent
    /// edges; `false` if either contains a cycle.
    pub fn is_acyclic(&self) -> bool {
        let subclass: Vec<(String, String)> =
            self.classes.values().filter_map(|c| c.superclass.clone().map(|s| (c.iri.clone(), s))).collect();
        let intents: Vec<(String, String)> = self
            .hierarchy
            .values()
            .flat_map(|n| n.parents.iter().map(|p| (n.iri.clone(), p.clone())))
            .collect();
        topo_sortable(&subclass) && topo_sortable(&intents)
    }
}

fn topo_sortable(edges: &[(String, String)]) -> bool {
    let mut indegree: BTreeMap<&str, usize> = BTreeMap::new();
    let mut out: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (a, b) in edges {
        indegree.entry(a).or_default();
        *indegree.entry(b).or_default() += 1;
        out.entry(a).or_default().push(b);
    }
    let mut queue: Vec<&str> = indegree.iter().filter(|(_, d)| **d == 0).map(|(n, _)| *n).collect();
    let mut visited = 0;
    while let Some(n) = queue.pop() {
        visited += 1;
        for m in out.get(n).into_iter().flatten() {
            let d = indegree.get_mut(m).expect("node present");
            *d -= 1;
            if *d == 0 {
                queue.push(m);
            }
        }
    }
    visited == indegree.len()
}

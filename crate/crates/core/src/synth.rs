//! Deterministic synthetic interaction corpus.
//!
//! Stands in for AutoML-derived workflows: dataset profiles are drawn from
//! log-uniform ranges, every task gets an intent consistent with its
//! dataset's target type (up to a noise rate), a metric, optional algorithm
//! constraints, a linear workflow ending in a matching predictor, an
//! evaluation and a feedback score. Each user carries hidden preferences
//! (favourite metric and algorithms, leniency) that bias their tasks, so
//! there is user-specific signal for link prediction to pick up.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profile::{annotate, dataset_iri, DatasetProfile, TargetType};
use crate::schema::{AlgorithmKind, Schema};
use crate::store::Graph;
use crate::term::{Term, Triple};
use crate::vocab::{class, da, prop, RDF_TYPE};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_users: usize,
    pub n_datasets_cat: usize,
    pub n_datasets_num: usize,
    pub tasks_per_dataset: usize,
    /// Probability of each of the two constraint slots being filled.
    pub constraint_rate: f64,
    /// Fraction of constraints that are soft preferences (`isHard = false`).
    pub preference_rate: f64,
    pub max_steps: usize,
    /// Probability that a task's intent disagrees with its target type.
    pub intent_noise: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 7,
            n_users: 30,
            n_datasets_cat: 68,
            n_datasets_num: 28,
            tasks_per_dataset: 5,
            constraint_rate: 0.4,
            preference_rate: 0.3,
            max_steps: 4,
            intent_noise: 0.05,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{0} must lie in [0, 1]")]
    Rate(&'static str),
    #[error("{0} must be at least 1")]
    Count(&'static str),
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, v) in [
            ("constraint_rate", self.constraint_rate),
            ("preference_rate", self.preference_rate),
            ("intent_noise", self.intent_noise),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ConfigError::Rate(name));
            }
        }
        for (name, v) in [
            ("n_users", self.n_users),
            ("n_datasets_cat + n_datasets_num", self.n_datasets_cat + self.n_datasets_num),
            ("tasks_per_dataset", self.tasks_per_dataset),
            ("max_steps", self.max_steps),
        ] {
            if v == 0 {
                return Err(ConfigError::Count(name));
            }
        }
        Ok(())
    }
}

fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (rng.random::<f64>() * (hi.ln() - lo.ln()) + lo.ln()).exp()
}

/// Draws `n_datasets_cat` categorical and `n_datasets_num` numerical profiles.
pub fn synth_dataset_profiles(cfg: &SynthConfig) -> Vec<DatasetProfile> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_da7a);
    let mut out = Vec::with_capacity(cfg.n_datasets_cat + cfg.n_datasets_num);
    let kinds = std::iter::repeat_n(TargetType::Categorical, cfg.n_datasets_cat)
        .chain(std::iter::repeat_n(TargetType::Numerical, cfg.n_datasets_num));
    for (i, target_type) in kinds.enumerate() {
        let n_instances = log_uniform(&mut rng, 50.0, 100_000.0).round() as usize;
        let n_features = log_uniform(&mut rng, 2.0, 500.0).round() as usize;
        let n_numeric = rng.random_range(0..=n_features);
        let pct_missing = if rng.random_bool(0.6) { 0.0 } else { rng.random_range(0.0..0.3) };
        let prefix = match target_type {
            TargetType::Categorical => "cat",
            TargetType::Numerical => "num",
        };
        let mut p = DatasetProfile {
            name: format!("synth-{prefix}-{i:03}"),
            n_instances,
            n_features,
            n_numeric,
            n_categorical: n_features - n_numeric,
            pct_missing,
            target_type,
            n_classes: None,
            imbalance: None,
            std_target: None,
        };
        match target_type {
            TargetType::Categorical => {
                let classes = if rng.random_bool(0.5) { 2 } else { rng.random_range(3..=10) };
                p.n_classes = Some(classes);
                p.imbalance = Some(if rng.random_bool(0.3) { 1.0 } else { log_uniform(&mut rng, 1.0, 20.0) });
            }
            TargetType::Numerical => p.std_target = Some(log_uniform(&mut rng, 0.01, 1000.0)),
        }
        out.push(p);
    }
    out
}

/// Hidden per-user tastes.
struct UserPrefs {
    iri: String,
    metric_cls: String,
    metric_reg: String,
    fav_cls: Vec<String>,
    fav_reg: Vec<String>,
    fav_pre: String,
    leniency: f64,
}

impl UserPrefs {
    fn metric(&self, intent: &str) -> &str {
        if intent == da("Classification") {
            &self.metric_cls
        } else {
            &self.metric_reg
        }
    }

    fn favourites(&self, intent: &str) -> &[String] {
        if intent == da("Classification") {
            &self.fav_cls
        } else {
            &self.fav_reg
        }
    }
}

/// Global popularity of metrics; earlier entries are more popular.
fn weighted_pick<'a>(rng: &mut impl Rng, items: &'a [String]) -> &'a str {
    let weights: Vec<f64> = (0..items.len()).map(|i| 1.0 / (i as f64 + 1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut x = rng.random::<f64>() * total;
    for (item, w) in items.iter().zip(weights) {
        if x < w {
            return item;
        }
        x -= w;
    }
    items.last().expect("nonempty pool")
}

fn metric_pool(schema: &Schema, intent: &str) -> Vec<String> {
    // Popularity order used by weighted_pick.
    let order = [
        "Accuracy", "F1-Score", "AUC", "Precision", "Recall", "BalancedAccuracy", "R2", "RMSE", "MSE", "MAE",
    ];
    let pool = schema.metrics_for(intent);
    let mut v: Vec<String> = order.iter().map(|m| da(m)).filter(|m| pool.contains(m)).collect();
    let rest: Vec<String> = pool.into_iter().filter(|m| !v.contains(m)).collect();
    v.extend(rest);
    v
}

fn split_algorithms(schema: &Schema, intent: &str) -> (Vec<String>, Vec<String>) {
    let mut modeling = Vec::new();
    let mut pre = Vec::new();
    for a in schema.algorithms_for(intent) {
        match schema.algorithm_kind(&a) {
            Some(AlgorithmKind::Modeling) => modeling.push(a),
            Some(AlgorithmKind::Preprocessing) => pre.push(a),
            None => {}
        }
    }
    (modeling, pre)
}

/// Builds the full corpus graph: schema, dataset characteristics, users and
/// tasks. Output depends only on `(schema, cfg)`.
pub fn synthesize(schema: &Schema, cfg: &SynthConfig) -> Graph {
    let mut g = schema.graph().clone();
    let profiles = synth_dataset_profiles(cfg);
    for p in &profiles {
        annotate(&mut g, schema, p).expect("synthetic profiles are schema-valid");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let cls = da("Classification");
    let reg = da("Regression");
    let (cls_models, cls_pre) = split_algorithms(schema, &cls);
    let (reg_models, reg_pre) = split_algorithms(schema, &reg);
    let cls_metrics = metric_pool(schema, &cls);
    let reg_metrics = metric_pool(schema, &reg);

    let mut triples: Vec<Triple> = Vec::new();
    let expertise = ["novice", "intermediate", "expert"];
    let users: Vec<UserPrefs> = (0..cfg.n_users)
        .map(|i| {
            let iri = da(&format!("user-{i:03}"));
            triples.push(Triple::iris(&iri, RDF_TYPE, class::USER));
            let level = expertise[[0, 0, 1, 1, 2][rng.random_range(0..5)]];
            triples.push(Triple::with_literal(&iri, prop::HAS_EXPERTISE, Term::string(level)));
            UserPrefs {
                metric_cls: weighted_pick(&mut rng, &cls_metrics).to_string(),
                metric_reg: weighted_pick(&mut rng, &reg_metrics).to_string(),
                fav_cls: cls_models.choose_multiple(&mut rng, 2).cloned().collect(),
                fav_reg: reg_models.choose_multiple(&mut rng, 2).cloned().collect(),
                fav_pre: cls_pre.iter().filter(|p| reg_pre.contains(p)).cloned().collect::<Vec<_>>()
                    .choose(&mut rng)
                    .cloned()
                    .expect("shared preprocessors"),
                leniency: rng.random_range(-1.0..1.0),
                iri,
            }
        })
        .collect();

    let no_pre = da("NoPreprocessing");
    let mut task_no = 0usize;
    for p in &profiles {
        let dataset = dataset_iri(&p.name);
        for _ in 0..cfg.tasks_per_dataset {
            let task = da(&format!("task-{task_no:05}"));
            task_no += 1;
            let user = &users[rng.random_range(0..users.len())];
            let natural = match p.target_type {
                TargetType::Categorical => &cls,
                TargetType::Numerical => &reg,
            };
            let intent = if rng.random_bool(cfg.intent_noise) {
                if natural == &cls { &reg } else { &cls }
            } else {
                natural
            };
            let (models, pres, metrics) = if intent == &cls {
                (&cls_models, &cls_pre, &cls_metrics)
            } else {
                (&reg_models, &reg_pre, &reg_metrics)
            };
            let metric = if rng.random_bool(0.65) {
                user.metric(intent).to_string()
            } else {
                weighted_pick(&mut rng, metrics).to_string()
            };

            let t = |r: &str, o: &str| Triple::iris(&task, r, o);
            triples.push(t(RDF_TYPE, class::TASK));
            triples.push(t(prop::REQUESTED_BY, &user.iri));
            triples.push(t(prop::USES_DATASET, &dataset));
            triples.push(t(prop::HAS_INTENT, intent));
            triples.push(t(prop::HAS_REQUIREMENT, &metric));

            // Algorithm constraints.
            let mut used: Vec<String> = Vec::new();
            let mut excluded: Vec<String> = Vec::new();
            for slot in 0..2 {
                if !rng.random_bool(cfg.constraint_rate) {
                    continue;
                }
                let fav = user.favourites(intent);
                let pick = if rng.random_bool(0.7) {
                    if rng.random_bool(0.8) { fav.choose(&mut rng) } else { Some(&user.fav_pre) }
                } else if rng.random_bool(0.75) {
                    models.choose(&mut rng)
                } else {
                    pres.choose(&mut rng)
                };
                let Some(alg) = pick.cloned() else { continue };
                if used.contains(&alg) || excluded.contains(&alg) {
                    continue;
                }
                let exclude = rng.random_bool(0.15);
                let c = da(&format!("constraint-{}-{slot}", &task[3..]));
                triples.push(t(prop::HAS_CONSTRAINT, &c));
                triples.push(Triple::iris(&c, RDF_TYPE, class::ALGORITHM_CONSTRAINT));
                triples.push(Triple::iris(&c, prop::ON_ALGORITHM, &alg));
                triples.push(Triple::with_literal(
                    &c,
                    prop::CONSTRAINT_ACTION,
                    Term::string(if exclude { "exclude" } else { "use" }),
                ));
                triples.push(Triple::with_literal(&c, prop::IS_HARD, Term::boolean(!rng.random_bool(cfg.preference_rate))));
                if exclude {
                    excluded.push(alg);
                } else {
                    used.push(alg);
                }
            }

            // Workflow: preprocessing steps then one predictor.
            let allowed = |a: &&String| !excluded.contains(a);
            let required_model = used.iter().find(|a| models.contains(a)).cloned();
            let predictor = required_model.unwrap_or_else(|| {
                let favs: Vec<&String> = user.favourites(intent).iter().filter(allowed).collect();
                if !favs.is_empty() && rng.random_bool(0.6) {
                    favs[rng.random_range(0..favs.len())].clone()
                } else {
                    let pool: Vec<&String> = models.iter().filter(allowed).collect();
                    pool[rng.random_range(0..pool.len())].clone()
                }
            });
            let required_pre: Vec<String> = used.iter().filter(|a| pres.contains(a)).cloned().collect();
            let mut n_steps = rng.random_range(1..=cfg.max_steps).max(required_pre.len() + 1);
            let mut chain: Vec<String> = required_pre.clone();
            if chain.is_empty() && n_steps >= 2 && allowed(&&no_pre) && rng.random_bool(0.4) {
                chain.push(no_pre.clone());
                n_steps = 2;
            }
            let mut extra: Vec<&String> =
                pres.iter().filter(|a| allowed(a) && **a != no_pre && !chain.contains(a)).collect();
            while chain.len() + 1 < n_steps && !extra.is_empty() {
                let i = rng.random_range(0..extra.len());
                chain.push(extra.swap_remove(i).clone());
            }
            chain.push(predictor.clone());

            let wf = da(&format!("workflow-{}", &task[3..]));
            triples.push(t(prop::ACHIEVED_BY, &wf));
            triples.push(Triple::iris(&wf, RDF_TYPE, class::WORKFLOW));
            let mut prev: Option<String> = None;
            for (i, alg) in chain.iter().enumerate() {
                let step = da(&format!("step-{}-{i}", &task[3..]));
                triples.push(Triple::iris(&wf, prop::HAS_STEP, &step));
                triples.push(Triple::iris(&step, RDF_TYPE, class::STEP));
                triples.push(Triple::iris(&step, prop::USES_ALGORITHM, alg));
                if let Some(p) = prev {
                    triples.push(Triple::iris(&p, prop::FOLLOWED_BY, &step));
                }
                prev = Some(step);
            }

            let ev = da(&format!("evaluation-{}", &task[3..]));
            triples.push(Triple::iris(&wf, prop::HAS_EVALUATION, &ev));
            triples.push(Triple::iris(&ev, RDF_TYPE, class::MODEL_EVALUATION));
            triples.push(Triple::iris(&ev, prop::SPECIFIED_METRIC, &metric));
            triples.push(Triple::with_literal(&ev, prop::EVALUATION_VALUE, Term::float(pseudo_score(&mut rng, &metric))));

            let fb = da(&format!("feedback-{}", &task[3..]));
            let liked = user.favourites(intent).contains(&predictor);
            let raw = 3.0 + user.leniency + if liked { 1.0 } else { -0.5 } + rng.random_range(-1.0..1.0);
            let score = raw.round().clamp(1.0, 5.0) as i64;
            triples.push(Triple::iris(&wf, prop::HAS_FEEDBACK, &fb));
            triples.push(Triple::iris(&fb, RDF_TYPE, class::FEEDBACK));
            triples.push(Triple::with_literal(&fb, prop::FEEDBACK_SCORE, Term::integer(score)));
        }
    }

    schema.validate_batch(&g, &triples).expect("synthetic triples are schema-valid");
    g.extend(triples).expect("well-formed");
    g
}

/// A plausible value for `metric`, rounded to 4 decimals.
pub fn pseudo_score(rng: &mut impl Rng, metric: &str) -> f64 {
    let v = match crate::vocab::local_name(metric) {
        "MSE" => log_uniform(rng, 0.01, 100.0),
        "RMSE" | "MAE" => log_uniform(rng, 0.1, 10.0),
        "R2" => rng.random_range(0.2..0.95),
        "SilhouetteScore" => rng.random_range(0.1..0.8),
        _ => rng.random_range(0.6..0.99),
    };
    (v * 1e4).round() / 1e4
}

/// Triple counts per source, mirroring how the corpus is assembled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceCounts {
    pub schema: usize,
    pub characteristics: usize,
    pub experiments: usize,
}

impl SourceCounts {
    pub fn total(&self) -> usize {
        self.schema + self.characteristics + self.experiments
    }
}

/// Splits a corpus into schema triples, dataset characteristic triples
/// (anything about a `Dataset` entity) and experiment triples (the rest).
pub fn source_breakdown(schema: &Schema, g: &Graph) -> SourceCounts {
    let datasets: BTreeSet<Term> = g.instances_of(&Term::Iri(class::DATASET.into()));
    let mut c = SourceCounts::default();
    for t in g.iter() {
        if schema.graph().contains(&t) {
            c.schema += 1;
        } else if datasets.contains(&t.subject) {
            c.characteristics += 1;
        } else {
            c.experiments += 1;
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig { n_users: 5, n_datasets_cat: 6, n_datasets_num: 3, tasks_per_dataset: 3, ..Default::default() }
    }

    #[test]
    fn default_profile_count() {
        let p = synth_dataset_profiles(&SynthConfig::default());
        assert_eq!(p.len(), 96);
        assert!(p.iter().all(DatasetProfile::is_valid));
        assert_eq!(p.iter().filter(|p| p.target_type == TargetType::Categorical).count(), 68);
        for q in &p {
            assert!((50..=100_000).contains(&q.n_instances));
            assert!((2..=500).contains(&q.n_features));
        }
    }

    #[test]
    fn profiles_are_deterministic() {
        assert_eq!(synth_dataset_profiles(&small()), synth_dataset_profiles(&small()));
    }

    #[test]
    fn same_seed_same_graph() {
        let schema = Schema::bootstrap();
        let a = synthesize(&schema, &small());
        let b = synthesize(&schema, &small());
        assert_eq!(crate::store::to_ntriples_string(&a), crate::store::to_ntriples_string(&b));
        let c = synthesize(&schema, &SynthConfig { seed: 8, ..small() });
        assert_ne!(a, c);
    }

    #[test]
    fn zero_constraint_rate() {
        let schema = Schema::bootstrap();
        let g = synthesize(&schema, &SynthConfig { constraint_rate: 0.0, ..small() });
        assert!(g.find(None, Some(&Term::Iri(prop::HAS_CONSTRAINT.into())), None).is_empty());
    }

    #[test]
    fn config_validation() {
        assert!(SynthConfig::default().validate().is_ok());
        assert_eq!(SynthConfig { constraint_rate: 1.5, ..small() }.validate(), Err(ConfigError::Rate("constraint_rate")));
        assert_eq!(SynthConfig { n_users: 0, ..small() }.validate(), Err(ConfigError::Count("n_users")));
    }
}

//! Maps a store graph onto the entity/relation vocabulary that gets embedded.
//!
//! IRIs embed as themselves. Each distinct literal becomes an opaque entity
//! named by its N-Triples rendering, except that numeric values of a
//! relation with more than five distinct values are replaced by the quintile
//! they fall in (`da:nInstances#q3`). A constraint's target algorithm is also
//! linked straight to its task through [`SHORTCUT_RELATION`], so algorithm
//! constraints can be ranked like any other tail.

use std::collections::{BTreeMap, BTreeSet};

use dakg_core::vocab::prop;
use dakg_core::{Graph, Term, Triple};
use serde::{Deserialize, Serialize};

/// Task → algorithm named by one of its constraints.
pub const SHORTCUT_RELATION: &str = "da:hasConstraint/onAlgorithm";

/// Relations with at most this many distinct numeric values stay unbucketed.
const MAX_RAW_VALUES: usize = 5;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingView {
    /// Relation → the four ascending cut points between quintiles.
    pub buckets: BTreeMap<String, Vec<f64>>,
    pub shortcuts: bool,
}

pub type NamedTriple = [String; 3];

impl EmbeddingView {
    /// Chooses which numeric relations to bucket and where to cut them.
    pub fn fit(g: &Graph) -> Self {
        let mut values: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for t in g.iter() {
            if let (Term::Iri(r), Some(v)) = (&t.relation, numeric(&t.object)) {
                values.entry(r.clone()).or_default().push(v);
            }
        }
        let mut buckets = BTreeMap::new();
        for (r, mut vals) in values {
            vals.sort_by(f64::total_cmp);
            let mut distinct = vals.clone();
            distinct.dedup();
            if distinct.len() <= MAX_RAW_VALUES {
                continue;
            }
            let n = vals.len();
            let cuts = (1..5).map(|k| vals[(k * n / 5).min(n - 1)]).collect();
            buckets.insert(r, cuts);
        }
        EmbeddingView { buckets, shortcuts: true }
    }

    /// Entity name for an object term seen under `relation`.
    pub fn object_name(&self, relation: &str, obj: &Term) -> String {
        match obj {
            Term::Iri(i) => i.clone(),
            lit => match (self.buckets.get(relation), numeric(lit)) {
                (Some(cuts), Some(v)) => {
                    let k = cuts.partition_point(|c| *c <= v);
                    format!("{relation}#q{}", k + 1)
                }
                _ => lit.to_string(),
            },
        }
    }

    pub fn map_triple(&self, t: &Triple) -> NamedTriple {
        let r = t.relation.as_iri().expect("relations are IRIs").to_string();
        let o = self.object_name(&r, &t.object);
        [t.subject.as_iri().expect("subjects are IRIs").to_string(), r, o]
    }

    /// All view triples of `g`, sorted and without duplicates.
    pub fn triples(&self, g: &Graph) -> Vec<NamedTriple> {
        let mut out: BTreeSet<NamedTriple> = g.iter().map(|t| self.map_triple(&t)).collect();
        if self.shortcuts {
            out.extend(self.shortcut_triples(g));
        }
        out.into_iter().collect()
    }

    pub fn shortcut_triples(&self, g: &Graph) -> Vec<NamedTriple> {
        let mut out = Vec::new();
        for t in g.find(None, Some(&Term::Iri(prop::HAS_CONSTRAINT.into())), None) {
            for alg in g.objects(&t.object, prop::ON_ALGORITHM) {
                if let (Some(task), Some(a)) = (t.subject.as_iri(), alg.as_iri()) {
                    out.push([task.to_string(), SHORTCUT_RELATION.to_string(), a.to_string()]);
                }
            }
        }
        out
    }
}

fn numeric(t: &Term) -> Option<f64> {
    match t.datatype() {
        Some(dakg_core::Datatype::Integer | dakg_core::Datatype::Float) => t.as_f64(),
        _ => None,
    }
}

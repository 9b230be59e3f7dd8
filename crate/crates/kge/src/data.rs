//! Interned triples, stratified splits and per-relation candidate sets.

use std::collections::{BTreeMap, HashMap, HashSet};

use dakg_core::schema::Range;
use dakg_core::{Graph, Schema, Term};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::view::{EmbeddingView, NamedTriple, SHORTCUT_RELATION};

pub type IdTriple = [u32; 3];

/// Bidirectional name ↔ id table. Ids are dense and never reused.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Interner {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl From<Vec<String>> for Interner {
    fn from(names: Vec<String>) -> Self {
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i as u32)).collect();
        Interner { names, index }
    }
}

impl From<Interner> for Vec<String> {
    fn from(i: Interner) -> Self {
        i.names
    }
}

impl Interner {
    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub ratios: (f64, f64, f64),
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec { ratios: (0.8, 0.1, 0.1), seed: 0 }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), String> {
        let (a, b, c) = self.ratios;
        if a <= 0.0 || b <= 0.0 || c <= 0.0 || ((a + b + c) - 1.0).abs() > 1e-9 {
            return Err(format!("split ratios {:?} must be positive and sum to 1", self.ratios));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    /// Realized (train, valid, test) fractions.
    pub realized: (f64, f64, f64),
    /// Valid/test triples moved into train for coverage.
    pub moved: usize,
    /// Set when valid or test ended up empty.
    pub degenerate: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Split {
    pub train: Vec<IdTriple>,
    pub valid: Vec<IdTriple>,
    pub test: Vec<IdTriple>,
    pub report: SplitReport,
}

/// Stratified random split by relation, followed by moving into train every
/// valid/test triple whose head, relation or tail has no train occurrence.
pub fn split(triples: &[IdTriple], spec: &SplitSpec) -> Split {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut by_rel: BTreeMap<u32, Vec<IdTriple>> = BTreeMap::new();
    for t in triples {
        by_rel.entry(t[1]).or_default().push(*t);
    }
    let mut out = Split::default();
    for (_, mut group) in by_rel {
        group.sort_unstable();
        group.shuffle(&mut rng);
        let n = group.len() as f64;
        let n_valid = (n * spec.ratios.1).round() as usize;
        let n_test = ((n * spec.ratios.2).round() as usize).min(group.len() - n_valid);
        out.valid.extend_from_slice(&group[..n_valid]);
        out.test.extend_from_slice(&group[n_valid..n_valid + n_test]);
        out.train.extend_from_slice(&group[n_valid + n_test..]);
    }

    let mut ents: HashSet<u32> = HashSet::new();
    let mut rels: HashSet<u32> = HashSet::new();
    for t in &out.train {
        ents.extend([t[0], t[2]]);
        rels.insert(t[1]);
    }
    let mut moved = 0;
    for part in [&mut out.valid, &mut out.test] {
        let mut kept = Vec::with_capacity(part.len());
        for t in part.drain(..) {
            if ents.contains(&t[0]) && ents.contains(&t[2]) && rels.contains(&t[1]) {
                kept.push(t);
            } else {
                ents.extend([t[0], t[2]]);
                rels.insert(t[1]);
                out.train.push(t);
                moved += 1;
            }
        }
        *part = kept;
    }
    let n = triples.len().max(1) as f64;
    out.report = SplitReport {
        realized: (out.train.len() as f64 / n, out.valid.len() as f64 / n, out.test.len() as f64 / n),
        moved,
        degenerate: out.valid.is_empty() || out.test.is_empty(),
    };
    out
}

/// Per relation, the entities considered when ranking heads and tails in the
/// range-filtered mode. Sorted entity ids.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CandidateSets {
    pub head: Vec<Vec<u32>>,
    pub tail: Vec<Vec<u32>>,
}

impl CandidateSets {
    /// Class-ranged schema properties use the instances of the class; literal
    /// ranges and relations outside the schema use the values observed in
    /// `triples`.
    pub fn build(
        schema: &Schema,
        g: &Graph,
        entities: &Interner,
        relations: &Interner,
        triples: &[IdTriple],
    ) -> Self {
        let n = relations.len();
        let mut seen_head = vec![Vec::new(); n];
        let mut seen_tail = vec![Vec::new(); n];
        for t in triples {
            seen_head[t[1] as usize].push(t[0]);
            seen_tail[t[1] as usize].push(t[2]);
        }
        let instances = |class: &str| -> Vec<u32> {
            g.instances_of(&Term::Iri(class.to_string()))
                .iter()
                .filter_map(|e| e.as_iri().and_then(|i| entities.get(i)))
                .collect()
        };
        let mut head = Vec::with_capacity(n);
        let mut tail = Vec::with_capacity(n);
        for r in 0..n {
            let name = relations.name(r as u32);
            let (dom, rng) = if name == SHORTCUT_RELATION {
                (Some(dakg_core::vocab::class::TASK.to_string()), Some(dakg_core::vocab::class::ALGORITHM.to_string()))
            } else if let Some(p) = schema.property(name) {
                let rng = match &p.range {
                    Range::Class(c) => Some(c.clone()),
                    Range::Literal(_) => None,
                };
                (Some(p.domain.clone()), rng)
            } else {
                (None, None)
            };
            let pick = |class: Option<String>, seen: &mut Vec<u32>| {
                let mut v = match class {
                    Some(c) => instances(&c),
                    None => std::mem::take(seen),
                };
                v.sort_unstable();
                v.dedup();
                v
            };
            head.push(pick(dom, &mut seen_head[r]));
            tail.push(pick(rng, &mut seen_tail[r]));
        }
        CandidateSets { head, tail }
    }
}

/// An indexed, split embedding dataset built from a graph.
#[derive(Clone, Debug)]
pub struct KgData {
    pub view: EmbeddingView,
    pub entities: Interner,
    pub relations: Interner,
    pub all: Vec<IdTriple>,
    pub train: Vec<IdTriple>,
    pub valid: Vec<IdTriple>,
    pub test: Vec<IdTriple>,
    pub candidates: CandidateSets,
    pub split_report: SplitReport,
}

impl KgData {
    pub fn build(g: &Graph, schema: &Schema, spec: &SplitSpec) -> Self {
        let view = EmbeddingView::fit(g);
        let named = view.triples(g);
        let mut entities = Interner::default();
        let mut relations = Interner::default();
        let all = intern_all(&named, &mut entities, &mut relations);
        let s = split(&all, spec);
        let candidates = CandidateSets::build(schema, g, &entities, &relations, &all);
        KgData {
            view,
            entities,
            relations,
            all,
            train: s.train,
            valid: s.valid,
            test: s.test,
            candidates,
            split_report: s.report,
        }
    }

    /// Every triple of every split, for the standard filtered setting.
    pub fn known(&self) -> HashSet<IdTriple> {
        self.all.iter().copied().collect()
    }

    /// Test triples restricted to one relation.
    pub fn test_for(&self, relation: &str) -> Vec<IdTriple> {
        let Some(r) = self.relations.get(relation) else { return Vec::new() };
        self.test.iter().filter(|t| t[1] == r).copied().collect()
    }

    pub fn named(&self, t: &IdTriple) -> NamedTriple {
        [
            self.entities.name(t[0]).to_string(),
            self.relations.name(t[1]).to_string(),
            self.entities.name(t[2]).to_string(),
        ]
    }
}

pub fn intern_all(named: &[NamedTriple], entities: &mut Interner, relations: &mut Interner) -> Vec<IdTriple> {
    named
        .iter()
        .map(|[h, r, t]| [entities.intern(h), relations.intern(r), entities.intern(t)])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_leaf_goes_to_train() {
        // Entity 9 occurs exactly once.
        let mut ts: Vec<IdTriple> = (0..40).map(|i| [i % 4, 0, 4 + i % 3]).collect();
        ts.sort_unstable();
        ts.dedup();
        ts.push([0, 0, 9]);
        for seed in 0..20 {
            let s = split(&ts, &SplitSpec { seed, ..Default::default() });
            assert!(s.train.contains(&[0, 0, 9]));
            assert_eq!(s.train.len() + s.valid.len() + s.test.len(), ts.len());
        }
    }

    #[test]
    fn same_seed_same_split() {
        let ts: Vec<IdTriple> = (0..200).map(|i| [i % 17, i % 3, (i * 7) % 23]).collect();
        let a = split(&ts, &SplitSpec::default());
        let b = split(&ts, &SplitSpec::default());
        assert_eq!(a, b);
    }

    #[test]
    fn interner_serializes_as_name_list() {
        let mut i = Interner::default();
        i.intern("b");
        i.intern("a");
        assert_eq!(i.intern("b"), 0);
        let json = serde_json::to_string(&i).unwrap();
        assert_eq!(json, r#"["b","a"]"#);
        let back: Interner = serde_json::from_str(&json).unwrap();
        assert_eq!(back.get("a"), Some(1));
    }

    #[test]
    fn degenerate_graph_is_flagged() {
        let s = split(&[[0, 0, 1]], &SplitSpec::default());
        assert_eq!(s.train.len(), 1);
        assert!(s.report.degenerate);
    }
}

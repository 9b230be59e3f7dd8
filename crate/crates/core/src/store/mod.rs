//! In-memory triple store.
//!
//! Terms are interned to `u32` ids and every triple is kept in three ordered
//! permutation indexes (SPO, POS, OSP), so any pattern with a bound prefix is a
//! range scan. The store is plain data: share it behind `&Graph` for reads and
//! take `&mut Graph` (or a lock) for writes.

pub(crate) mod ntriples;
mod pattern;

use std::collections::{BTreeSet, HashMap};
use std::ops::Bound;

pub use ntriples::{load_ntriples, parse_ntriples, save_ntriples, to_ntriples_string, NtError};
pub use pattern::{Atom, Binding, Comparator, Filter, Node, Pattern, PatternError};

use crate::term::{Term, TermError, Triple};
use crate::vocab::{RDFS_SUBCLASS_OF, RDF_TYPE};

type Key = (u32, u32, u32);

#[derive(Clone, Debug, Default)]
pub struct Graph {
    terms: Vec<Term>,
    ids: HashMap<Term, u32>,
    spo: BTreeSet<Key>,
    pos: BTreeSet<Key>,
    osp: BTreeSet<Key>,
}

impl PartialEq for Graph {
    /// Set equality over triples, independent of interning order.
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len() && self.iter().all(|t| other.contains(&t))
    }
}

impl Eq for Graph {}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_triples(triples: impl IntoIterator<Item = Triple>) -> Result<Self, TermError> {
        let mut g = Graph::new();
        for t in triples {
            g.add(t)?;
        }
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.spo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spo.is_empty()
    }

    /// Sizes of the three permutation indexes; all equal to `len()`.
    pub fn index_sizes(&self) -> [usize; 3] {
        [self.spo.len(), self.pos.len(), self.osp.len()]
    }

    fn intern(&mut self, term: &Term) -> u32 {
        if let Some(&id) = self.ids.get(term) {
            return id;
        }
        let id = u32::try_from(self.terms.len()).expect("term table overflow");
        self.terms.push(term.clone());
        self.ids.insert(term.clone(), id);
        id
    }

    fn id(&self, term: &Term) -> Option<u32> {
        self.ids.get(term).copied()
    }

    fn term(&self, id: u32) -> &Term {
        &self.terms[id as usize]
    }

    fn key(&self, t: &Triple) -> Option<Key> {
        Some((self.id(&t.subject)?, self.id(&t.relation)?, self.id(&t.object)?))
    }

    fn triple(&self, (s, r, o): Key) -> Triple {
        Triple { subject: self.term(s).clone(), relation: self.term(r).clone(), object: self.term(o).clone() }
    }

    /// Inserts a triple. Returns `Ok(true)` when it was not already present.
    pub fn add(&mut self, t: Triple) -> Result<bool, TermError> {
        t.check()?;
        let key = (self.intern(&t.subject), self.intern(&t.relation), self.intern(&t.object));
        if !self.spo.insert(key) {
            return Ok(false);
        }
        self.pos.insert((key.1, key.2, key.0));
        self.osp.insert((key.2, key.0, key.1));
        Ok(true)
    }

    /// Inserts every triple; stops at the first malformed one.
    pub fn extend(&mut self, triples: impl IntoIterator<Item = Triple>) -> Result<usize, TermError> {
        let mut added = 0;
        for t in triples {
            if self.add(t)? {
                added += 1;
            }
        }
        Ok(added)
    }

    pub fn remove(&mut self, t: &Triple) -> bool {
        let Some(key) = self.key(t) else { return false };
        if !self.spo.remove(&key) {
            return false;
        }
        self.pos.remove(&(key.1, key.2, key.0));
        self.osp.remove(&(key.2, key.0, key.1));
        true
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.key(t).is_some_and(|k| self.spo.contains(&k))
    }

    /// Every stored triple, in index order.
    pub fn iter(&self) -> impl Iterator<Item = Triple> + '_ {
        self.spo.iter().map(|&k| self.triple(k))
    }

    /// Triples sorted by their rendered terms; stable across processes.
    pub fn sorted_triples(&self) -> Vec<Triple> {
        let mut v: Vec<Triple> = self.iter().collect();
        v.sort();
        v
    }

    /// Raw index scan for an optional (s, r, o) shape. Unknown constant terms
    /// produce an empty result.
    fn scan(&self, s: Option<u32>, r: Option<u32>, o: Option<u32>) -> Vec<Key> {
        fn range(set: &BTreeSet<Key>, a: Option<u32>, b: Option<u32>) -> impl Iterator<Item = &Key> {
            let lo = (a.unwrap_or(0), b.unwrap_or(0), 0);
            let hi = match (a, b) {
                (Some(a), Some(b)) => Bound::Included((a, b, u32::MAX)),
                (Some(a), None) => Bound::Included((a, u32::MAX, u32::MAX)),
                _ => Bound::Unbounded,
            };
            set.range((Bound::Included(lo), hi))
        }
        match (s, r, o) {
            (Some(s), Some(r), Some(o)) => {
                if self.spo.contains(&(s, r, o)) {
                    vec![(s, r, o)]
                } else {
                    vec![]
                }
            }
            (Some(s), r, None) => range(&self.spo, Some(s), r).copied().collect(),
            (None, Some(r), o) => range(&self.pos, Some(r), o).map(|&(r, o, s)| (s, r, o)).collect(),
            (s, None, Some(o)) => range(&self.osp, Some(o), s).map(|&(o, s, r)| (s, r, o)).collect(),
            (None, None, None) => self.spo.iter().copied().collect(),
        }
    }

    /// Triples matching an optional subject / relation / object shape.
    pub fn find(&self, s: Option<&Term>, r: Option<&Term>, o: Option<&Term>) -> Vec<Triple> {
        let lookup = |t: Option<&Term>| match t {
            None => Some(None),
            Some(t) => self.id(t).map(Some),
        };
        let (Some(s), Some(r), Some(o)) = (lookup(s), lookup(r), lookup(o)) else {
            return Vec::new();
        };
        self.scan(s, r, o).into_iter().map(|k| self.triple(k)).collect()
    }

    /// Objects of `(subject, relation, ?)`, sorted.
    pub fn objects(&self, subject: &Term, relation: &str) -> Vec<Term> {
        let mut v: Vec<Term> =
            self.find(Some(subject), Some(&Term::Iri(relation.into())), None).into_iter().map(|t| t.object).collect();
        v.sort();
        v
    }

    /// First object of `(subject, relation, ?)` in term order.
    pub fn object(&self, subject: &Term, relation: &str) -> Option<Term> {
        self.objects(subject, relation).into_iter().next()
    }

    /// Subjects of `(?, relation, object)`, sorted.
    pub fn subjects(&self, relation: &str, object: &Term) -> Vec<Term> {
        let mut v: Vec<Term> =
            self.find(None, Some(&Term::Iri(relation.into())), Some(object)).into_iter().map(|t| t.subject).collect();
        v.sort();
        v
    }

    /// Distinct subjects of any triple.
    pub fn subject_count(&self) -> usize {
        let mut n = 0;
        let mut last = None;
        for &(s, _, _) in &self.spo {
            if last != Some(s) {
                n += 1;
                last = Some(s);
            }
        }
        n
    }

    /// Distinct relations in use.
    pub fn relations(&self) -> BTreeSet<Term> {
        let mut out = BTreeSet::new();
        let mut last = None;
        for &(r, _, _) in &self.pos {
            if last != Some(r) {
                out.insert(self.term(r).clone());
                last = Some(r);
            }
        }
        out
    }

    /// Distinct IRIs occurring as subject or object.
    pub fn entities(&self) -> BTreeSet<Term> {
        let mut out = BTreeSet::new();
        for &(s, _, o) in &self.spo {
            out.insert(self.term(s).clone());
            let o = self.term(o);
            if o.is_iri() {
                out.insert(o.clone());
            }
        }
        out
    }

    /// `class` together with all of its transitive subclasses.
    pub fn subclass_closure(&self, class: &Term) -> BTreeSet<Term> {
        let mut out = BTreeSet::new();
        let Some(sub_of) = self.id(&Term::Iri(RDFS_SUBCLASS_OF.into())) else {
            if class.is_iri() {
                out.insert(class.clone());
            }
            return out;
        };
        let mut stack = vec![class.clone()];
        while let Some(c) = stack.pop() {
            if !out.insert(c.clone()) {
                continue;
            }
            if let Some(cid) = self.id(&c) {
                for (s, _, _) in self.scan(None, Some(sub_of), Some(cid)) {
                    stack.push(self.term(s).clone());
                }
            }
        }
        out
    }

    /// Entities typed as `class` or any of its transitive subclasses.
    pub fn instances_of(&self, class: &Term) -> BTreeSet<Term> {
        let mut out = BTreeSet::new();
        if !class.is_iri() {
            return out;
        }
        let Some(type_id) = self.id(&Term::Iri(RDF_TYPE.into())) else { return out };
        for c in self.subclass_closure(class) {
            if let Some(cid) = self.id(&c) {
                for (s, _, _) in self.scan(None, Some(type_id), Some(cid)) {
                    out.insert(self.term(s).clone());
                }
            }
        }
        out
    }

    /// Direct types of an entity.
    pub fn types_of(&self, entity: &Term) -> Vec<Term> {
        self.objects(entity, RDF_TYPE)
    }

    /// Whether `entity` is typed as `class` (directly or via a subclass).
    pub fn is_instance_of(&self, entity: &Term, class: &Term) -> bool {
        let types = self.types_of(entity);
        if types.is_empty() {
            return false;
        }
        let closure = self.subclass_closure(class);
        types.iter().any(|t| closure.contains(t))
    }

    /// Evaluates a conjunctive pattern. See [`Pattern`].
    pub fn match_pattern(&self, p: &Pattern) -> Result<Vec<Binding>, PatternError> {
        pattern::evaluate(self, p)
    }

    /// Groups the matches of `p` by `var` and ranks the values by count
    /// (descending), breaking ties by term order, keeping the first `k`.
    pub fn rank_by_frequency(&self, p: &Pattern, var: &str, k: usize) -> Result<Vec<(Term, usize)>, PatternError> {
        if !p.atom_vars().contains(var) {
            return Err(PatternError::UnboundVariable(var.to_string()));
        }
        let mut unlimited = p.clone();
        unlimited.limit = None;
        let mut counts: HashMap<Term, usize> = HashMap::new();
        for b in self.match_pattern(&unlimited)? {
            if let Some(v) = b.get(var) {
                *counts.entry(v.clone()).or_default() += 1;
            }
        }
        let mut ranked: Vec<(Term, usize)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(k);
        Ok(ranked)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::Datatype;

    fn iri(s: &str) -> Term {
        Term::Iri(s.into())
    }

    #[test]
    fn insert_then_read() {
        let mut g = Graph::new();
        g.add(Triple::iris("taskA", "hasIntent", "Classification")).unwrap();
        let p = Pattern::new(vec![Atom::parse("taskA", "hasIntent", "?x").unwrap()]);
        let b = g.match_pattern(&p).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0]["x"], iri("Classification"));
    }

    #[test]
    fn set_semantics() {
        let mut g = Graph::new();
        let t = Triple::iris("a", "r", "b");
        assert!(g.add(t.clone()).unwrap());
        assert!(!g.add(t).unwrap());
        assert_eq!(g.len(), 1);
        assert_eq!(g.index_sizes(), [1, 1, 1]);
    }

    #[test]
    fn literal_relation_rejected() {
        let mut g = Graph::new();
        let t = Triple { subject: iri("a"), relation: Term::string("r"), object: iri("b") };
        assert!(g.add(t).is_err());
        assert!(g.is_empty());
    }

    #[test]
    fn remove_keeps_indexes_coherent() {
        let mut g = Graph::new();
        g.add(Triple::iris("a", "r", "b")).unwrap();
        g.add(Triple::iris("a", "r", "c")).unwrap();
        assert!(g.remove(&Triple::iris("a", "r", "b")));
        assert!(!g.remove(&Triple::iris("a", "r", "b")));
        assert_eq!(g.index_sizes(), [1, 1, 1]);
        assert_eq!(g.find(None, None, Some(&iri("b"))).len(), 0);
    }

    #[test]
    fn instances_follow_subclass_closure() {
        let mut g = Graph::new();
        g.add(Triple::iris("B", RDFS_SUBCLASS_OF, "A")).unwrap();
        g.add(Triple::iris("C", RDFS_SUBCLASS_OF, "B")).unwrap();
        g.add(Triple::iris("x", RDF_TYPE, "C")).unwrap();
        g.add(Triple::iris("y", RDF_TYPE, "A")).unwrap();
        let inst = g.instances_of(&iri("A"));
        assert!(inst.contains(&iri("x")) && inst.contains(&iri("y")));
        assert_eq!(g.instances_of(&iri("C")).len(), 1);
        assert!(g.instances_of(&iri("Unknown")).is_empty());
        assert!(g.is_instance_of(&iri("x"), &iri("A")));
    }

    #[test]
    fn find_by_object_and_relation() {
        let mut g = Graph::new();
        g.add(Triple::with_literal("d", "n", Term::integer(3))).unwrap();
        g.add(Triple::with_literal("e", "n", Term::integer(3))).unwrap();
        let lit = Term::literal("3", Datatype::Integer).unwrap();
        assert_eq!(g.subjects("n", &lit), vec![iri("d"), iri("e")]);
    }
}

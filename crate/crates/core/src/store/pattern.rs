//! Conjunctive basic-graph-pattern evaluation.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Graph, Key};
use crate::store::ntriples::parse_term;
use crate::term::Term;

/// A position in an atom: a constant term or a named variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Node {
    Term(Term),
    Var(String),
}

impl Node {
    pub fn var(name: &str) -> Self {
        Node::Var(name.trim_start_matches('?').to_string())
    }

    pub fn iri(iri: &str) -> Self {
        Node::Term(Term::Iri(iri.to_string()))
    }

    /// `?name` is a variable, `<iri>` or a bare token is an IRI and
    /// `"lex"^^<dt>` is a literal.
    pub fn parse(s: &str) -> Result<Self, PatternError> {
        let s = s.trim();
        if let Some(v) = s.strip_prefix('?') {
            if v.is_empty() || v.chars().any(char::is_whitespace) {
                return Err(PatternError::BadNode(s.to_string()));
            }
            return Ok(Node::Var(v.to_string()));
        }
        if s.starts_with('<') || s.starts_with('"') {
            return parse_term(s).map(Node::Term).map_err(|_| PatternError::BadNode(s.to_string()));
        }
        Term::iri(s).map(Node::Term).map_err(|_| PatternError::BadNode(s.to_string()))
    }

    fn as_var(&self) -> Option<&str> {
        match self {
            Node::Var(v) => Some(v),
            Node::Term(_) => None,
        }
    }
}

impl TryFrom<String> for Node {
    type Error = PatternError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        Node::parse(&s)
    }
}

impl From<Node> for String {
    fn from(n: Node) -> String {
        n.to_string()
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Var(v) => write!(f, "?{v}"),
            Node::Term(t) => write!(f, "{t}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atom {
    pub s: Node,
    pub r: Node,
    pub o: Node,
}

impl Atom {
    pub fn new(s: Node, r: Node, o: Node) -> Self {
        Atom { s, r, o }
    }

    pub fn parse(s: &str, r: &str, o: &str) -> Result<Self, PatternError> {
        Ok(Atom { s: Node::parse(s)?, r: Node::parse(r)?, o: Node::parse(o)? })
    }

    fn nodes(&self) -> [&Node; 3] {
        [&self.s, &self.r, &self.o]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
}

impl Comparator {
    pub fn holds(self, lhs: &Term, rhs: &Term) -> bool {
        let ord = lhs.filter_cmp(rhs);
        match self {
            Comparator::Eq => ord == Some(Ordering::Equal) || lhs == rhs,
            Comparator::Ne => !(ord == Some(Ordering::Equal) || lhs == rhs),
            Comparator::Lt => ord == Some(Ordering::Less),
            Comparator::Le => matches!(ord, Some(Ordering::Less | Ordering::Equal)),
            Comparator::Gt => ord == Some(Ordering::Greater),
            Comparator::Ge => matches!(ord, Some(Ordering::Greater | Ordering::Equal)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Filter {
    pub var: String,
    pub cmp: Comparator,
    pub value: Node,
}

impl Filter {
    pub fn new(var: &str, cmp: Comparator, value: Term) -> Self {
        Filter { var: var.trim_start_matches('?').to_string(), cmp, value: Node::Term(value) }
    }
}

/// A conjunction of atoms with optional filters, grouping variable and limit.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pattern {
    pub atoms: Vec<Atom>,
    #[serde(default)]
    pub filters: Vec<Filter>,
    #[serde(default)]
    pub group_var: Option<String>,
    #[serde(default)]
    pub limit: Option<usize>,
}

/// Variable name → bound term.
pub type Binding = BTreeMap<String, Term>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PatternError {
    #[error("variable ?{0} is not bound by any atom")]
    UnboundVariable(String),
    #[error("cannot parse pattern node {0:?}")]
    BadNode(String),
    #[error("limit must be positive")]
    ZeroLimit,
    #[error("filter value for ?{0} must be a constant term")]
    NonConstantFilter(String),
}

impl Pattern {
    pub fn new(atoms: Vec<Atom>) -> Self {
        Pattern { atoms, ..Default::default() }
    }

    pub fn with_filter(mut self, f: Filter) -> Self {
        self.filters.push(f);
        self
    }

    pub fn with_limit(mut self, limit: usize) -> Self {
        self.limit = Some(limit);
        self
    }

    pub fn grouped_by(mut self, var: &str) -> Self {
        self.group_var = Some(var.trim_start_matches('?').to_string());
        self
    }

    /// Variables that occur in some atom.
    pub fn atom_vars(&self) -> BTreeSet<String> {
        self.atoms.iter().flat_map(|a| a.nodes()).filter_map(|n| n.as_var().map(str::to_string)).collect()
    }

    pub fn validate(&self) -> Result<(), PatternError> {
        let vars = self.atom_vars();
        for f in &self.filters {
            if !vars.contains(&f.var) {
                return Err(PatternError::UnboundVariable(f.var.clone()));
            }
            if f.value.as_var().is_some() {
                return Err(PatternError::NonConstantFilter(f.var.clone()));
            }
        }
        if let Some(g) = &self.group_var {
            if !vars.contains(g) {
                return Err(PatternError::UnboundVariable(g.clone()));
            }
        }
        if self.limit == Some(0) {
            return Err(PatternError::ZeroLimit);
        }
        Ok(())
    }
}

enum Slot {
    Const(u32),
    Var(usize),
    /// A constant that is not interned: nothing can match.
    Missing,
}

pub(super) fn evaluate(g: &Graph, p: &Pattern) -> Result<Vec<Binding>, PatternError> {
    p.validate()?;
    let vars: Vec<String> = p.atom_vars().into_iter().collect();
    let var_index = |name: &str| vars.iter().position(|v| v == name).expect("validated");
    let compiled: Vec<[Slot; 3]> = p
        .atoms
        .iter()
        .map(|a| {
            a.nodes().map(|n| match n {
                Node::Var(v) => Slot::Var(var_index(v)),
                Node::Term(t) => g.id(t).map_or(Slot::Missing, Slot::Const),
            })
        })
        .collect();

    let mut rows: Vec<Vec<Option<u32>>> = vec![vec![None; vars.len()]];
    let mut pending: Vec<usize> = (0..compiled.len()).collect();
    let mut bound = vec![false; vars.len()];
    while !pending.is_empty() {
        // Most-bound atom first; ties keep the written order.
        let (pick, _) = pending
            .iter()
            .enumerate()
            .max_by_key(|(i, &ai)| {
                let n = compiled[ai]
                    .iter()
                    .filter(|s| match s {
                        Slot::Const(_) | Slot::Missing => true,
                        Slot::Var(v) => bound[*v],
                    })
                    .count();
                (n, std::cmp::Reverse(*i))
            })
            .expect("nonempty");
        let ai = pending.remove(pick);
        let atom = &compiled[ai];
        if atom.iter().any(|s| matches!(s, Slot::Missing)) {
            return Ok(Vec::new());
        }
        let mut next = Vec::new();
        for row in &rows {
            let fixed = |s: &Slot| match s {
                Slot::Const(c) => Some(*c),
                Slot::Var(v) => row[*v],
                Slot::Missing => unreachable!(),
            };
            let (fs, fr, fo) = (fixed(&atom[0]), fixed(&atom[1]), fixed(&atom[2]));
            for key in g.scan(fs, fr, fo) {
                if let Some(r) = extend_row(row, atom, key) {
                    next.push(r);
                }
            }
        }
        for s in atom {
            if let Slot::Var(v) = s {
                bound[*v] = true;
            }
        }
        rows = next;
        if rows.is_empty() {
            return Ok(Vec::new());
        }
    }

    let mut out: Vec<Binding> = rows
        .into_iter()
        .map(|row| {
            vars.iter().zip(row).filter_map(|(v, id)| id.map(|id| (v.clone(), g.term(id).clone()))).collect()
        })
        .filter(|b: &Binding| {
            p.filters.iter().all(|f| {
                let Node::Term(value) = &f.value else { return false };
                b.get(&f.var).is_some_and(|t| f.cmp.holds(t, value))
            })
        })
        .collect();
    out.sort_by(|a, b| a.values().cmp(b.values()));
    out.dedup();
    if let Some(limit) = p.limit {
        out.truncate(limit);
    }
    Ok(out)
}

fn extend_row(row: &[Option<u32>], atom: &[Slot; 3], (s, r, o): Key) -> Option<Vec<Option<u32>>> {
    let mut out = row.to_vec();
    for (slot, value) in atom.iter().zip([s, r, o]) {
        if let Slot::Var(v) = slot {
            match out[*v] {
                Some(existing) if existing != value => return None,
                _ => out[*v] = Some(value),
            }
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::Triple;

    fn fixture() -> Graph {
        let mut g = Graph::new();
        for (t, i, u) in [("t1", "Classification", "u1"), ("t2", "Classification", "u2"), ("t3", "Regression", "u2")] {
            g.add(Triple::iris(t, "hasIntent", i)).unwrap();
            g.add(Triple::iris(t, "requestedBy", u)).unwrap();
        }
        g
    }

    #[test]
    fn single_atom_count() {
        let g = fixture();
        let p = Pattern::new(vec![Atom::parse("?t", "hasIntent", "Classification").unwrap()]);
        assert_eq!(g.match_pattern(&p).unwrap().len(), 2);
    }

    #[test]
    fn two_atom_join() {
        let g = fixture();
        let p = Pattern::new(vec![
            Atom::parse("?t", "requestedBy", "u1").unwrap(),
            Atom::parse("?t", "hasIntent", "?i").unwrap(),
        ]);
        let b = g.match_pattern(&p).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0]["i"], Term::Iri("Classification".into()));
    }

    #[test]
    fn empty_graph_matches_nothing() {
        let p = Pattern::new(vec![Atom::parse("?s", "?p", "?o").unwrap()]);
        assert!(Graph::new().match_pattern(&p).unwrap().is_empty());
    }

    #[test]
    fn unbound_filter_variable_is_an_error() {
        let p = Pattern::new(vec![Atom::parse("?t", "hasIntent", "?i").unwrap()]).with_filter(Filter::new(
            "x",
            Comparator::Eq,
            Term::integer(1),
        ));
        assert_eq!(fixture().match_pattern(&p), Err(PatternError::UnboundVariable("x".into())));
    }

    #[test]
    fn ground_pattern_yields_one_empty_binding() {
        let g = fixture();
        let hit = Pattern::new(vec![Atom::parse("t1", "hasIntent", "Classification").unwrap()]);
        assert_eq!(g.match_pattern(&hit).unwrap(), vec![Binding::new()]);
        let miss = Pattern::new(vec![Atom::parse("t1", "hasIntent", "Regression").unwrap()]);
        assert!(g.match_pattern(&miss).unwrap().is_empty());
    }

    #[test]
    fn results_are_sorted_before_limit() {
        let g = fixture();
        let p = Pattern::new(vec![Atom::parse("?t", "hasIntent", "?i").unwrap()]).with_limit(2);
        let b = g.match_pattern(&p).unwrap();
        let ts: Vec<_> = b.iter().map(|b| b["t"].lexical().to_string()).collect();
        // bindings order by (i, t): Classification t1, Classification t2
        assert_eq!(ts, ["t1", "t2"]);
    }

    #[test]
    fn rank_by_frequency_orders_and_breaks_ties() {
        let mut g = Graph::new();
        for (t, m) in [("a", "Accuracy"), ("b", "Accuracy"), ("c", "Accuracy"), ("d", "F1")] {
            g.add(Triple::iris(t, "hasRequirement", m)).unwrap();
        }
        let p = Pattern::new(vec![Atom::parse("?t", "hasRequirement", "?m").unwrap()]);
        let r = g.rank_by_frequency(&p, "m", 5).unwrap();
        assert_eq!(r, vec![(Term::Iri("Accuracy".into()), 3), (Term::Iri("F1".into()), 1)]);

        let mut tie = Graph::new();
        for (t, m) in [("a", "Zeta"), ("b", "Alpha"), ("c", "Mid")] {
            tie.add(Triple::iris(t, "hasRequirement", m)).unwrap();
        }
        let names: Vec<_> =
            tie.rank_by_frequency(&p, "m", 3).unwrap().into_iter().map(|(t, _)| t.lexical().to_string()).collect();
        assert_eq!(names, ["Alpha", "Mid", "Zeta"]);

        let none = Pattern::new(vec![Atom::parse("?t", "nothing", "?m").unwrap()]);
        assert!(g.rank_by_frequency(&none, "m", 3).unwrap().is_empty());
    }

    #[test]
    fn numeric_filters() {
        let mut g = Graph::new();
        for (d, n) in [("d1", 100), ("d2", 5000), ("d3", 50)] {
            g.add(Triple::with_literal(d, "size", Term::integer(n))).unwrap();
        }
        let p = Pattern::new(vec![Atom::parse("?d", "size", "?n").unwrap()]).with_filter(Filter::new(
            "n",
            Comparator::Ge,
            Term::integer(100),
        ));
        assert_eq!(g.match_pattern(&p).unwrap().len(), 2);
    }

    #[test]
    fn pattern_json_round_trip() {
        let p = Pattern::new(vec![Atom::parse("?t", "da:hasIntent", "\"3\"^^<xsd:integer>").unwrap()])
            .grouped_by("t");
        let s = serde_json::to_string(&p).unwrap();
        let back: Pattern = serde_json::from_str(&s).unwrap();
        assert_eq!(p, back);
    }
}

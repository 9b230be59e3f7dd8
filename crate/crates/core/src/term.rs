//! RDF-style terms and triples.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Literal datatypes understood by the store.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Datatype {
    String,
    Integer,
    Float,
    Boolean,
}

impl Datatype {
    pub fn iri(self) -> &'static str {
        match self {
            Datatype::String => "xsd:string",
            Datatype::Integer => "xsd:integer",
            Datatype::Float => "xsd:float",
            Datatype::Boolean => "xsd:boolean",
        }
    }

    pub fn from_iri(iri: &str) -> Option<Self> {
        match iri {
            "xsd:string" => Some(Datatype::String),
            "xsd:integer" => Some(Datatype::Integer),
            "xsd:float" | "xsd:double" | "xsd:decimal" => Some(Datatype::Float),
            "xsd:boolean" => Some(Datatype::Boolean),
            _ => None,
        }
    }

    fn accepts(self, lexical: &str) -> bool {
        match self {
            Datatype::String => true,
            Datatype::Integer => lexical.parse::<i64>().is_ok(),
            Datatype::Float => lexical.parse::<f64>().is_ok(),
            Datatype::Boolean => matches!(lexical, "true" | "false"),
        }
    }
}

/// An IRI or a typed literal.
///
/// Terms order IRIs before literals and otherwise compare lexically, which is
/// the ordering used for every deterministic tie-break in the store.
///
/// In JSON an IRI is a bare string (`"da:Task"`) and a literal uses its
/// N-Triples form (`"\"3\"^^<xsd:integer>"`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Term {
    Iri(String),
    Literal { value: String, datatype: Datatype },
}

/// Which field of a triple a term occupies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Position {
    Subject,
    Relation,
    Object,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Position::Subject => "subject",
            Position::Relation => "relation",
            Position::Object => "object",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TermError {
    #[error("empty IRI")]
    EmptyIri,
    #[error("IRI {0:?} contains whitespace")]
    WhitespaceInIri(String),
    #[error("{value:?} is not a valid {datatype:?} literal")]
    BadLiteral { value: String, datatype: Datatype },
    #[error("malformed {position}: {reason}")]
    Malformed { position: Position, reason: String },
}

impl Term {
    pub fn iri(value: impl Into<String>) -> Result<Self, TermError> {
        let value = value.into();
        check_iri(&value)?;
        Ok(Term::Iri(value))
    }

    pub fn literal(value: impl Into<String>, datatype: Datatype) -> Result<Self, TermError> {
        let value = value.into();
        if !datatype.accepts(&value) {
            return Err(TermError::BadLiteral { value, datatype });
        }
        Ok(Term::Literal { value, datatype })
    }

    pub fn string(value: impl Into<String>) -> Self {
        Term::Literal { value: value.into(), datatype: Datatype::String }
    }

    pub fn integer(value: i64) -> Self {
        Term::Literal { value: value.to_string(), datatype: Datatype::Integer }
    }

    /// Float literal; non-finite values are not representable and panic.
    pub fn float(value: f64) -> Self {
        assert!(value.is_finite(), "non-finite float literal");
        Term::Literal { value: format_float(value), datatype: Datatype::Float }
    }

    pub fn boolean(value: bool) -> Self {
        Term::Literal { value: value.to_string(), datatype: Datatype::Boolean }
    }

    pub fn is_iri(&self) -> bool {
        matches!(self, Term::Iri(_))
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Term::Literal { .. })
    }

    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Term::Iri(s) => Some(s),
            Term::Literal { .. } => None,
        }
    }

    /// Lexical value: the IRI itself or the literal's lexical form.
    pub fn lexical(&self) -> &str {
        match self {
            Term::Iri(s) => s,
            Term::Literal { value, .. } => value,
        }
    }

    pub fn datatype(&self) -> Option<Datatype> {
        match self {
            Term::Literal { datatype, .. } => Some(*datatype),
            Term::Iri(_) => None,
        }
    }

    /// Numeric value of an integer or float literal.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Term::Literal { value, datatype: Datatype::Integer | Datatype::Float } => value.parse().ok(),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Term::Literal { value, datatype: Datatype::Boolean } => value.parse().ok(),
            _ => None,
        }
    }

    /// Checks the term invariants (non-empty whitespace-free IRIs, parseable literals).
    pub fn check(&self) -> Result<(), TermError> {
        match self {
            Term::Iri(s) => check_iri(s),
            Term::Literal { value, datatype } => {
                if datatype.accepts(value) {
                    Ok(())
                } else {
                    Err(TermError::BadLiteral { value: value.clone(), datatype: *datatype })
                }
            }
        }
    }

    /// Comparison used by pattern filters: numeric literals compare by value,
    /// everything else lexically within the same kind. Mixed kinds are unordered.
    pub fn filter_cmp(&self, other: &Term) -> Option<Ordering> {
        if let (Some(a), Some(b)) = (self.as_f64(), other.as_f64()) {
            return a.partial_cmp(&b);
        }
        match (self, other) {
            (Term::Iri(a), Term::Iri(b)) => Some(a.cmp(b)),
            (Term::Literal { value: a, datatype: da }, Term::Literal { value: b, datatype: db })
                if da == db =>
            {
                Some(a.cmp(b))
            }
            _ => None,
        }
    }
}

/// Formats a float so it always reads back as the same value and always
/// carries a decimal point or exponent.
pub fn format_float(value: f64) -> String {
    let s = format!("{value:?}");
    if s.contains(['.', 'e', 'E']) || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}

fn check_iri(value: &str) -> Result<(), TermError> {
    if value.is_empty() {
        return Err(TermError::EmptyIri);
    }
    if value.chars().any(char::is_whitespace) || value.contains(['<', '>', '"']) {
        return Err(TermError::WhitespaceInIri(value.to_string()));
    }
    Ok(())
}

impl TryFrom<String> for Term {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        let t = s.trim();
        if t.starts_with('"') || t.starts_with('<') {
            crate::store::ntriples::parse_term(t)
        } else {
            Term::iri(t).map_err(|e| e.to_string())
        }
    }
}

impl From<Term> for String {
    fn from(t: Term) -> String {
        match t {
            Term::Iri(i) => i,
            lit => lit.to_string(),
        }
    }
}

impl fmt::Display for Term {
    /// N-Triples style rendering.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(s) => write!(f, "<{s}>"),
            Term::Literal { value, datatype } => {
                f.write_str("\"")?;
                for c in value.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\r' => f.write_str("\\r")?,
                        '\t' => f.write_str("\\t")?,
                        c => write!(f, "{c}")?,
                    }
                }
                write!(f, "\"^^<{}>", datatype.iri())
            }
        }
    }
}

/// A subject–relation–object atom.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub subject: Term,
    pub relation: Term,
    pub object: Term,
}

impl Triple {
    /// Builds a triple, rejecting malformed terms with the offending position.
    pub fn new(subject: Term, relation: Term, object: Term) -> Result<Self, TermError> {
        let t = Triple { subject, relation, object };
        t.check()?;
        Ok(t)
    }

    /// Shorthand for an all-IRI triple built from trusted constants.
    pub fn iris(subject: &str, relation: &str, object: &str) -> Self {
        Triple {
            subject: Term::Iri(subject.to_string()),
            relation: Term::Iri(relation.to_string()),
            object: Term::Iri(object.to_string()),
        }
    }

    pub fn with_literal(subject: &str, relation: &str, object: Term) -> Self {
        Triple {
            subject: Term::Iri(subject.to_string()),
            relation: Term::Iri(relation.to_string()),
            object,
        }
    }

    pub fn check(&self) -> Result<(), TermError> {
        let malformed = |position, e: TermError| TermError::Malformed { position, reason: e.to_string() };
        if !self.subject.is_iri() {
            return Err(TermError::Malformed {
                position: Position::Subject,
                reason: "subject must be an IRI".into(),
            });
        }
        self.subject.check().map_err(|e| malformed(Position::Subject, e))?;
        if !self.relation.is_iri() {
            return Err(TermError::Malformed {
                position: Position::Relation,
                reason: "relation must be an IRI".into(),
            });
        }
        self.relation.check().map_err(|e| malformed(Position::Relation, e))?;
        self.object.check().map_err(|e| malformed(Position::Object, e))
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.relation, self.object)
    }
}

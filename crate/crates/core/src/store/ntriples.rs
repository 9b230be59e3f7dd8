//! Line-oriented N-Triples style persistence.
//!
//! One triple per line: `<s> <r> <o> .` where a literal object is written as
//! `"lexical"^^<xsd:type>`. Blank lines and `#` comments are ignored on load.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use super::Graph;
use crate::term::{Datatype, Term, Triple};

#[derive(Debug, Error)]
pub enum NtError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Writes the graph sorted by rendered line, so equal graphs give equal bytes.
pub fn save_ntriples(g: &Graph, path: impl AsRef<Path>) -> Result<(), NtError> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(to_ntriples_string(g).as_bytes())?;
    w.flush()?;
    Ok(())
}

pub fn to_ntriples_string(g: &Graph) -> String {
    let mut lines: Vec<String> = g.iter().map(|t| t.to_string()).collect();
    lines.sort_unstable();
    let mut out = String::with_capacity(lines.iter().map(|l| l.len() + 1).sum());
    for l in lines {
        out.push_str(&l);
        out.push('\n');
    }
    out
}

pub fn load_ntriples(path: impl AsRef<Path>) -> Result<Graph, NtError> {
    parse_ntriples(&fs::read_to_string(path)?)
}

pub fn parse_ntriples(text: &str) -> Result<Graph, NtError> {
    let mut g = Graph::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let t = parse_line(line).map_err(|message| NtError::Parse { line: i + 1, message })?;
        g.add(t).map_err(|e| NtError::Parse { line: i + 1, message: e.to_string() })?;
    }
    Ok(g)
}

fn parse_line(line: &str) -> Result<Triple, String> {
    let body = line.strip_suffix('.').ok_or("missing ' .' terminator")?.trim_end();
    let mut cur = Cursor { s: body, pos: 0 };
    let subject = cur.term()?;
    let relation = cur.term()?;
    let object = cur.term()?;
    cur.skip_ws();
    if cur.pos != body.len() {
        return Err(format!("unexpected trailing content {:?}", &body[cur.pos..]));
    }
    Triple::new(subject, relation, object).map_err(|e| e.to_string())
}

/// Parses one term in N-Triples notation.
pub(crate) fn parse_term(s: &str) -> Result<Term, String> {
    let mut cur = Cursor { s, pos: 0 };
    let t = cur.term()?;
    cur.skip_ws();
    if cur.pos != s.len() {
        return Err(format!("unexpected trailing content {:?}", &s[cur.pos..]));
    }
    Ok(t)
}

struct Cursor<'a> {
    s: &'a str,
    pos: usize,
}

impl Cursor<'_> {
    fn skip_ws(&mut self) {
        while self.s[self.pos..].starts_with([' ', '\t']) {
            self.pos += 1;
        }
    }

    fn term(&mut self) -> Result<Term, String> {
        self.skip_ws();
        let rest = &self.s[self.pos..];
        if rest.starts_with('<') {
            let iri = self.iri()?;
            Term::iri(iri).map_err(|e| e.to_string())
        } else if rest.starts_with('"') {
            self.literal()
        } else if rest.is_empty() {
            Err("expected a term, found end of line".into())
        } else {
            Err(format!("expected '<' or '\"' at {:?}", rest.chars().take(12).collect::<String>()))
        }
    }

    fn iri(&mut self) -> Result<String, String> {
        let rest = &self.s[self.pos + 1..];
        let end = rest.find('>').ok_or("unterminated IRI")?;
        let iri = rest[..end].to_string();
        self.pos += end + 2;
        Ok(iri)
    }

    fn literal(&mut self) -> Result<Term, String> {
        let mut value = String::new();
        let mut chars = self.s[self.pos + 1..].char_indices();
        let mut end = None;
        while let Some((i, c)) = chars.next() {
            match c {
                '"' => {
                    end = Some(i);
                    break;
                }
                '\\' => {
                    let (_, e) = chars.next().ok_or("dangling escape")?;
                    value.push(match e {
                        'n' => '\n',
                        'r' => '\r',
                        't' => '\t',
                        '"' => '"',
                        '\\' => '\\',
                        other => return Err(format!("unknown escape \\{other}")),
                    });
                }
                c => value.push(c),
            }
        }
        let end = end.ok_or("unterminated literal")?;
        self.pos += end + 2;
        let datatype = if self.s[self.pos..].starts_with("^^") {
            self.pos += 2;
            if !self.s[self.pos..].starts_with('<') {
                return Err("expected datatype IRI after ^^".into());
            }
            let dt = self.iri()?;
            Datatype::from_iri(&dt).ok_or_else(|| format!("unsupported datatype {dt}"))?
        } else {
            Datatype::String
        };
        Term::literal(value, datatype).map_err(|e| e.to_string())
    }
}

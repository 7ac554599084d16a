//! Line-oriented text format for knowledge bases.
//!
//! ```text
//! # comments run to the end of the line
//! [variables]
//! x, y
//!
//! [bn]
//! x | = 0.7
//! y | x=0 = 0.1
//! y | x=1 = 0.6
//!
//! [tbn]
//! x' | x=0 = 0.2
//! x' | x=1 = 0.9
//! y' | y=0, x'=1 = 0.5
//! ...
//!
//! [ontology]
//! A <= exists r . B @ x, !y
//! B and C <= D @
//! ```
//!
//! CPT lines give `P(child = true | condition)`; every assignment of the
//! parents needs its own line. In `[tbn]` children are primed and
//! conditions may mention both slices. An ontology line with nothing after
//! `@` (or no `@`) holds in every world.
//!
//! Each section reports its first error; errors from all sections are
//! returned together, each with a line and column.

use std::collections::BTreeSet;
use std::fmt;

use crate::bayes::{render_assignment, BayesNet, Cpt};
use crate::context::{Context, Literal, VAxiom, VOntology, VarSet};
use crate::dbn::{node_name, Dbn, TwoSliceNet};
use crate::elcore::{Concept, Gci};
use crate::error::Error;
use crate::reasoner::KnowledgeBase;

pub const SECTIONS: [&str; 4] = ["variables", "bn", "tbn", "ontology"];
const VARIABLES: usize = 0;
const BN: usize = 1;
const TBN: usize = 2;
const ONTOLOGY: usize = 3;

const KEYWORDS: [&str; 5] = ["top", "and", "exists", "true", "false"];

/// 1-based line and column (in characters).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub location: Location,
    /// `None` for problems with the document layout itself.
    pub section: Option<&'static str>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.section {
            Some(s) => write!(f, "{}: [{s}] {}", self.location, self.message),
            None => write!(f, "{}: {}", self.location, self.message),
        }
    }
}

/// Every diagnostic of a rejected document, ordered by location.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseErrors(pub Vec<Diagnostic>);

impl fmt::Display for ParseErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseErrors {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Located<T> {
    pub value: T,
    pub location: Location,
}

/// A CPT row such as `y' | x=1, y=0 = 0.25`. Names keep their prime.
#[derive(Clone, Debug, PartialEq)]
pub struct CptLine {
    pub child: Located<String>,
    pub condition: Vec<(Located<String>, bool)>,
    pub prob: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AxiomLine {
    pub location: Location,
    pub axiom: Gci,
    pub context: Vec<(Located<String>, bool)>,
}

/// The syntactic content of a document, before names are resolved.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KbDocument {
    /// Header location of each section, in [`SECTIONS`] order.
    pub headers: [Option<Location>; 4],
    pub variables: Vec<Located<String>>,
    pub bn: Vec<CptLine>,
    pub tbn: Vec<CptLine>,
    pub ontology: Vec<AxiomLine>,
}

struct Collector {
    diags: Vec<Diagnostic>,
    failed: [bool; 4],
}

impl Collector {
    fn new() -> Self {
        Collector {
            diags: Vec::new(),
            failed: [false; 4],
        }
    }

    fn section(&mut self, section: usize, location: Location, message: impl Into<String>) {
        if !self.failed[section] {
            self.failed[section] = true;
            self.diags.push(Diagnostic {
                location,
                section: Some(SECTIONS[section]),
                message: message.into(),
            });
        }
    }

    fn document(&mut self, location: Location, message: impl Into<String>) {
        self.diags.push(Diagnostic {
            location,
            section: None,
            message: message.into(),
        });
    }

    fn finish(mut self) -> Result<(), ParseErrors> {
        if self.diags.is_empty() {
            Ok(())
        } else {
            self.diags.sort_by_key(|d| d.location);
            Err(ParseErrors(self.diags))
        }
    }
}

/// A syntax error at a byte offset of the line being parsed.
struct SyntaxError {
    offset: usize,
    message: String,
}

fn syntax<T>(offset: usize, message: impl Into<String>) -> Result<T, SyntaxError> {
    Err(SyntaxError {
        offset,
        message: message.into(),
    })
}

fn column(text: &str, offset: usize) -> usize {
    text[..offset].chars().count() + 1
}

/// `s` trimmed, with the offset of its first character within the line.
fn trim_at(s: &str, base: usize) -> (usize, &str) {
    let lead = s.len() - s.trim_start().len();
    (base + lead, s.trim())
}

fn split_at_commas(s: &str, base: usize) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = 0;
    for (i, c) in s.char_indices() {
        if c == ',' {
            out.push(trim_at(&s[start..i], base + start));
            start = i + 1;
        }
    }
    out.push(trim_at(&s[start..], base + start));
    out
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn is_name(s: &str) -> bool {
    is_identifier(s) && !KEYWORDS.contains(&s)
}

fn split_prime(name: &str) -> (&str, bool) {
    match name.strip_suffix('\'') {
        Some(base) => (base, true),
        None => (name, false),
    }
}

fn check_node_name(name: &str, offset: usize) -> Result<(), SyntaxError> {
    if name.is_empty() {
        return syntax(offset, "expected a variable name");
    }
    if !is_name(split_prime(name).0) {
        return syntax(offset, format!("invalid variable name `{name}`"));
    }
    Ok(())
}

/// Splits a document into sections and parses every line. Names are not
/// resolved here.
pub fn parse_document(text: &str) -> Result<KbDocument, ParseErrors> {
    let mut errors = Collector::new();
    let doc = scan(text, &mut errors);
    errors.finish().map(|()| doc)
}

fn scan(text: &str, errors: &mut Collector) -> KbDocument {
    let mut doc = KbDocument::default();
    let mut current: Option<usize> = None;
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let number = i + 1;
        last_line = number;
        let line = raw.split('#').next().unwrap_or("");
        let (start, content) = trim_at(line, 0);
        if content.is_empty() {
            continue;
        }
        let here = |offset: usize| Location {
            line: number,
            column: column(line, offset),
        };
        if let Some(inner) = content.strip_prefix('[') {
            let Some(name) = inner.strip_suffix(']') else {
                errors.document(here(start), "unterminated section header");
                current = None;
                continue;
            };
            let name = name.trim();
            match SECTIONS.iter().position(|s| *s == name) {
                Some(s) if doc.headers[s].is_some() => {
                    errors.document(here(start), format!("section [{name}] appears twice"));
                    current = None;
                }
                Some(s) => {
                    doc.headers[s] = Some(here(start));
                    current = Some(s);
                }
                None => {
                    errors.document(here(start), format!("unknown section [{name}]"));
                    current = None;
                }
            }
            continue;
        }
        let Some(section) = current else {
            if doc.headers.iter().all(Option::is_none) {
                errors.document(here(start), "content before the first section header");
            }
            continue;
        };
        if errors.failed[section] {
            continue;
        }
        let result = match section {
            VARIABLES => scan_variables(line, &doc.variables).map(|names| {
                doc.variables.extend(names.into_iter().map(|(offset, value)| Located {
                    value,
                    location: here(offset),
                }))
            }),
            BN | TBN => scan_cpt(line, &here).map(|row| {
                if section == BN {
                    doc.bn.push(row)
                } else {
                    doc.tbn.push(row)
                }
            }),
            _ => scan_axiom(line, start, &here).map(|ax| doc.ontology.push(ax)),
        };
        if let Err(e) = result {
            errors.section(section, here(e.offset), e.message);
        }
    }
    for (s, header) in doc.headers.iter().enumerate() {
        if header.is_none() {
            errors.document(
                Location {
                    line: last_line.max(1),
                    column: 1,
                },
                format!("missing section [{}]", SECTIONS[s]),
            );
        }
    }
    doc
}

fn scan_variables(
    line: &str,
    declared: &[Located<String>],
) -> Result<Vec<(usize, String)>, SyntaxError> {
    let mut out: Vec<(usize, String)> = Vec::new();
    let mut start = None;
    let separators = line.char_indices().chain([(line.len(), ' ')]);
    for (i, c) in separators {
        if c == ',' || c.is_whitespace() {
            if let Some(s) = start.take() {
                let name = &line[s..i];
                if !is_name(name) {
                    return syntax(s, format!("invalid variable name `{name}`"));
                }
                if declared.iter().any(|d| d.value == name) || out.iter().any(|(_, n)| n == name) {
                    return syntax(s, format!("duplicate variable `{name}`"));
                }
                out.push((s, name.to_string()));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    Ok(out)
}

fn scan_cpt(line: &str, here: &dyn Fn(usize) -> Location) -> Result<CptLine, SyntaxError> {
    let Some(bar) = line.find('|') else {
        return syntax(trim_at(line, 0).0, "expected `child | condition = probability`");
    };
    let (child_at, child) = trim_at(&line[..bar], 0);
    check_node_name(child, child_at)?;
    let rest = &line[bar + 1..];
    let Some(eq) = rest.rfind('=') else {
        return syntax(line.len(), "expected `= probability`");
    };
    let (prob_at, prob_text) = trim_at(&rest[eq + 1..], bar + eq + 2);
    let prob: f64 = match prob_text.parse() {
        Ok(p) => p,
        Err(_) => return syntax(prob_at, format!("invalid probability `{prob_text}`")),
    };
    if !(0.0..=1.0).contains(&prob) {
        return syntax(prob_at, format!("probability {prob_text} outside [0, 1]"));
    }
    let mut condition = Vec::new();
    let cond = &rest[..eq];
    if !cond.trim().is_empty() {
        for (at, item) in split_at_commas(cond, bar + 1) {
            let Some((name, value)) = item.split_once('=') else {
                return syntax(at, format!("expected `name=0` or `name=1`, found `{item}`"));
            };
            let name = name.trim();
            check_node_name(name, at)?;
            let value = match value.trim() {
                "0" => false,
                "1" => true,
                v => return syntax(at, format!("value of `{name}` must be 0 or 1, found `{v}`")),
            };
            condition.push((
                Located {
                    value: name.to_string(),
                    location: here(at),
                },
                value,
            ));
        }
    }
    Ok(CptLine {
        child: Located {
            value: child.to_string(),
            location: here(child_at),
        },
        condition,
        prob,
    })
}

fn scan_axiom(
    line: &str,
    start: usize,
    here: &dyn Fn(usize) -> Location,
) -> Result<AxiomLine, SyntaxError> {
    let (body, ctx) = match line.find('@') {
        Some(at) => (&line[..at], Some((at + 1, &line[at + 1..]))),
        None => (line, None),
    };
    let axiom = parse_gci_at(body, 0)?;
    let mut context = Vec::new();
    if let Some((base, text)) = ctx {
        if !text.trim().is_empty() {
            for (at, item) in split_at_commas(text, base) {
                let (name, positive) = match item.strip_prefix('!') {
                    Some(rest) => (rest.trim(), false),
                    None => (item, true),
                };
                if !is_name(name) {
                    return syntax(at, format!("expected a literal `x` or `!x`, found `{item}`"));
                }
                context.push((
                    Located {
                        value: name.to_string(),
                        location: here(at),
                    },
                    positive,
                ));
            }
        }
    }
    Ok(AxiomLine {
        location: here(start),
        axiom,
        context,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Tok<'a> {
    Name(&'a str),
    Top,
    And,
    Exists,
    Dot,
    Open,
    Close,
    Sub,
}

impl fmt::Display for Tok<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Name(n) => write!(f, "`{n}`"),
            Tok::Top => f.write_str("`top`"),
            Tok::And => f.write_str("`and`"),
            Tok::Exists => f.write_str("`exists`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Open => f.write_str("`(`"),
            Tok::Close => f.write_str("`)`"),
            Tok::Sub => f.write_str("`<=`"),
        }
    }
}

fn tokenize(text: &str, base: usize) -> Result<Vec<(usize, Tok<'_>)>, SyntaxError> {
    let mut toks = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < text.len() {
        let c = text[i..].chars().next().expect("in bounds");
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        let tok = match c {
            '.' => Tok::Dot,
            '(' => Tok::Open,
            ')' => Tok::Close,
            '<' if bytes.get(i + 1) == Some(&b'=') => {
                toks.push((base + i, Tok::Sub));
                i += 2;
                continue;
            }
            c if c.is_ascii_alphabetic() => {
                let end = text[i..]
                    .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
                    .map_or(text.len(), |e| i + e);
                let word = &text[i..end];
                let tok = match word {
                    "top" => Tok::Top,
                    "and" => Tok::And,
                    "exists" => Tok::Exists,
                    w => Tok::Name(w),
                };
                toks.push((base + i, tok));
                i = end;
                continue;
            }
            c => return syntax(base + i, format!("unexpected character `{c}`")),
        };
        toks.push((base + i, tok));
        i += 1;
    }
    Ok(toks)
}

struct ConceptParser<'a> {
    toks: Vec<(usize, Tok<'a>)>,
    pos: usize,
    end: usize,
}

impl<'a> ConceptParser<'a> {
    fn peek(&self) -> Option<Tok<'a>> {
        self.toks.get(self.pos).map(|t| t.1)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.0)
    }

    fn unexpected<T>(&self, wanted: &str) -> Result<T, SyntaxError> {
        match self.peek() {
            Some(t) => syntax(self.offset(), format!("expected {wanted}, found {t}")),
            None => syntax(self.end, format!("expected {wanted}, found end of input")),
        }
    }

    fn concept(&mut self) -> Result<Concept, SyntaxError> {
        let mut c = self.primary()?;
        while self.peek() == Some(Tok::And) {
            self.pos += 1;
            let rhs = self.primary()?;
            c = Concept::and(c, rhs);
        }
        Ok(c)
    }

    fn primary(&mut self) -> Result<Concept, SyntaxError> {
        match self.peek() {
            Some(Tok::Exists) => {
                self.pos += 1;
                let role = match self.peek() {
                    Some(Tok::Name(r)) => r,
                    _ => return self.unexpected("a role name"),
                };
                self.pos += 1;
                if self.peek() != Some(Tok::Dot) {
                    return self.unexpected("`.`");
                }
                self.pos += 1;
                let filler = match self.peek() {
                    Some(Tok::Exists) => {
                        return syntax(self.offset(), "a nested `exists` filler must be parenthesized")
                    }
                    _ => self.atomic()?,
                };
                Ok(Concept::exists(role, filler))
            }
            _ => self.atomic(),
        }
    }

    fn atomic(&mut self) -> Result<Concept, SyntaxError> {
        match self.peek() {
            Some(Tok::Name(n)) => {
                self.pos += 1;
                Ok(Concept::atom(n))
            }
            Some(Tok::Top) => {
                self.pos += 1;
                Ok(Concept::Top)
            }
            Some(Tok::Open) => {
                self.pos += 1;
                let c = self.concept()?;
                if self.peek() != Some(Tok::Close) {
                    return self.unexpected("`)`");
                }
                self.pos += 1;
                Ok(c)
            }
            _ => self.unexpected("a concept"),
        }
    }
}

fn parse_gci_at(text: &str, base: usize) -> Result<Gci, SyntaxError> {
    let toks = tokenize(text, base)?;
    let mut p = ConceptParser {
        toks,
        pos: 0,
        end: base + text.trim_end().len(),
    };
    let lhs = p.concept()?;
    if p.peek() != Some(Tok::Sub) {
        return p.unexpected("`<=`");
    }
    p.pos += 1;
    let rhs = p.concept()?;
    if p.peek().is_some() {
        return p.unexpected("end of axiom");
    }
    Ok(Gci::new(lhs, rhs))
}

/// Parses an axiom such as `A and exists r . B <= C`.
pub fn parse_gci(text: &str) -> Result<Gci, Error> {
    parse_gci_at(text, 0).map_err(|e| {
        Error::InvalidFormula(format!("column {}: {}", column(text, e.offset), e.message))
    })
}

/// Parses a single concept expression.
pub fn parse_concept(text: &str) -> Result<Concept, Error> {
    let fail = |e: SyntaxError| {
        Error::InvalidFormula(format!("column {}: {}", column(text, e.offset), e.message))
    };
    let toks = tokenize(text, 0).map_err(fail)?;
    let mut p = ConceptParser {
        toks,
        pos: 0,
        end: text.trim_end().len(),
    };
    let c = p.concept().map_err(fail)?;
    if p.peek().is_some() {
        return Err(fail(p.unexpected::<()>("end of concept").unwrap_err()));
    }
    Ok(c)
}

/// Parses and validates a knowledge base.
pub fn parse_kb(text: &str) -> Result<KnowledgeBase, ParseErrors> {
    let mut errors = Collector::new();
    let doc = scan(text, &mut errors);
    let kb = resolve(&doc, &mut errors);
    errors.finish()?;
    Ok(kb.expect("a document without diagnostics resolves"))
}

impl KbDocument {
    /// Resolves names and checks every structural constraint.
    pub fn build(&self) -> Result<KnowledgeBase, ParseErrors> {
        let mut errors = Collector::new();
        let kb = resolve(self, &mut errors);
        errors.finish()?;
        Ok(kb.expect("a document without diagnostics resolves"))
    }
}

fn resolve(doc: &KbDocument, errors: &mut Collector) -> Option<KnowledgeBase> {
    if errors.failed[VARIABLES] || doc.headers[VARIABLES].is_none() {
        return None;
    }
    let header = |s: usize| doc.headers[s].unwrap_or_default();
    let vars = match VarSet::new(doc.variables.iter().map(|v| v.value.clone())) {
        Ok(v) => v,
        Err(e) => {
            errors.section(VARIABLES, header(VARIABLES), e.to_string());
            return None;
        }
    };
    let mut initial = None;
    if !errors.failed[BN] && doc.headers[BN].is_some() {
        match build_cpts(&doc.bn, &vars, false) {
            Ok(cpts) => match BayesNet::new(vars.clone(), cpts) {
                Ok(bn) => initial = Some(bn),
                Err(e) => errors.section(BN, header(BN), first_problem(e)),
            },
            Err((loc, msg)) => errors.section(BN, loc, msg),
        }
    }
    let mut transition = None;
    if !errors.failed[TBN] && doc.headers[TBN].is_some() {
        match build_cpts(&doc.tbn, &vars, true) {
            Ok(cpts) => match TwoSliceNet::new(vars.clone(), cpts) {
                Ok(tbn) => transition = Some(tbn),
                Err(e) => errors.section(TBN, header(TBN), first_problem(e)),
            },
            Err((loc, msg)) => errors.section(TBN, loc, msg),
        }
    }
    let mut ontology = None;
    if !errors.failed[ONTOLOGY] && doc.headers[ONTOLOGY].is_some() {
        match build_axioms(&doc.ontology, &vars) {
            Ok(axioms) => match VOntology::new(vars.clone(), axioms) {
                Ok(o) => ontology = Some(o),
                Err(e) => errors.section(ONTOLOGY, header(ONTOLOGY), e.to_string()),
            },
            Err((loc, msg)) => errors.section(ONTOLOGY, loc, msg),
        }
    }
    let dbn = Dbn::new(initial?, transition?).ok()?;
    KnowledgeBase::new(dbn, ontology?).ok()
}

fn first_problem(e: Error) -> String {
    match e {
        Error::InvalidNetwork(diags) if !diags.is_empty() => diags[0].to_string(),
        other => other.to_string(),
    }
}

type Located_<T> = Result<T, (Location, String)>;

fn resolve_node(name: &Located<String>, vars: &VarSet, two_slice: bool) -> Located_<usize> {
    let (base, primed) = split_prime(&name.value);
    let var = vars
        .index(base)
        .ok_or_else(|| (name.location, format!("unknown variable `{base}`")))?;
    if primed && !two_slice {
        return Err((
            name.location,
            format!("primed variable `{}` outside [tbn]", name.value),
        ));
    }
    Ok(if primed { vars.len() + var } else { var })
}

struct RowGroup {
    child: usize,
    first: Location,
    parents: Vec<usize>,
    rows: Vec<(Vec<bool>, f64)>,
}

fn build_cpts(lines: &[CptLine], vars: &VarSet, two_slice: bool) -> Located_<Vec<Cpt>> {
    let n = vars.len();
    let names = |node: usize| node_name(vars, node);
    let mut groups: Vec<RowGroup> = Vec::new();
    for line in lines {
        let child = resolve_node(&line.child, vars, two_slice)?;
        if two_slice && child < n {
            return Err((
                line.child.location,
                format!("variable `{}` takes no CPT; children in [tbn] are primed", line.child.value),
            ));
        }
        let mut parents = Vec::with_capacity(line.condition.len());
        for (name, _) in &line.condition {
            let p = resolve_node(name, vars, two_slice)?;
            if parents.contains(&p) {
                return Err((name.location, format!("parent `{}` repeated", name.value)));
            }
            parents.push(p);
        }
        let gi = match groups.iter().position(|g| g.child == child) {
            Some(gi) => gi,
            None => {
                groups.push(RowGroup {
                    child,
                    first: line.child.location,
                    parents: parents.clone(),
                    rows: Vec::new(),
                });
                groups.len() - 1
            }
        };
        let group = &mut groups[gi];
        let same_set = parents.len() == group.parents.len()
            && parents.iter().all(|p| group.parents.contains(p));
        if !same_set {
            let list = |ps: &[usize]| ps.iter().map(|&p| names(p)).collect::<Vec<_>>().join(", ");
            return Err((
                line.child.location,
                format!(
                    "rows of `{}` must condition on the same parents: expected {{{}}}, found {{{}}}",
                    line.child.value,
                    list(&group.parents),
                    list(&parents)
                ),
            ));
        }
        let values: Vec<bool> = group
            .parents
            .iter()
            .map(|gp| {
                let at = parents.iter().position(|p| p == gp).expect("same parent set");
                line.condition[at].1
            })
            .collect();
        if group.rows.iter().any(|(v, _)| *v == values) {
            let row = values.iter().fold(0usize, |acc, &b| acc << 1 | b as usize);
            return Err((
                line.child.location,
                format!(
                    "duplicate row `{} | {}`",
                    line.child.value,
                    render_assignment(&group.parents, row, &names)
                ),
            ));
        }
        group.rows.push((values, line.prob));
    }
    groups
        .into_iter()
        .map(|g| {
            Cpt::from_rows(g.child, g.parents, g.rows, &names).map_err(|d| (g.first, d.to_string()))
        })
        .collect()
}

fn build_axioms(lines: &[AxiomLine], vars: &VarSet) -> Located_<Vec<VAxiom>> {
    let mut out = Vec::with_capacity(lines.len());
    for line in lines {
        let mut lits = Vec::with_capacity(line.context.len());
        for (name, positive) in &line.context {
            let var = vars
                .index(&name.value)
                .ok_or_else(|| (name.location, format!("unknown variable `{}`", name.value)))?;
            if lits.iter().any(|l: &Literal| l.var == var && l.positive != *positive) {
                return Err((name.location, Error::InconsistentContext(name.value.clone()).to_string()));
            }
            lits.push(Literal {
                var,
                positive: *positive,
            });
        }
        let context = Context::new(lits).expect("clashes rejected above");
        out.push(VAxiom::new(line.axiom.clone(), context));
    }
    Ok(out)
}

/// Renders a knowledge base in the text format; [`parse_kb`] reads it back
/// to an equal value.
pub fn render_kb(kb: &KnowledgeBase) -> String {
    let vars = kb.vars();
    let mut out = String::from("[variables]\n");
    out.push_str(&vars.names().join(", "));
    out.push_str("\n\n[bn]\n");
    render_cpts(&mut out, kb.dbn().initial().cpts(), vars);
    out.push_str("\n[tbn]\n");
    render_cpts(&mut out, kb.dbn().transition().cpts(), vars);
    out.push_str("\n[ontology]\n");
    for ax in kb.ontology().axioms() {
        let ctx = ax
            .context
            .literals()
            .map(|l| {
                let name = vars.name(l.var);
                if l.positive {
                    name.to_string()
                } else {
                    format!("!{name}")
                }
            })
            .collect::<Vec<_>>()
            .join(", ");
        if ctx.is_empty() {
            out.push_str(&format!("{} @\n", ax.axiom));
        } else {
            out.push_str(&format!("{} @ {ctx}\n", ax.axiom));
        }
    }
    out
}

fn render_cpts(out: &mut String, cpts: &[Cpt], vars: &VarSet) {
    let names = |node: usize| node_name(vars, node);
    for cpt in cpts {
        for (row, p) in cpt.table.iter().enumerate() {
            out.push_str(&format!(
                "{} | {} = {p}\n",
                names(cpt.child),
                render_assignment(&cpt.parents, row, &names)
            ));
        }
    }
}

/// Names used anywhere in the ontology, for diagnostics about queries.
pub fn signature(kb: &KnowledgeBase) -> BTreeSet<String> {
    let mut names = BTreeSet::new();
    for ax in kb.ontology().axioms() {
        ax.axiom.lhs.collect_names(&mut names);
        ax.axiom.rhs.collect_names(&mut names);
    }
    names.into_iter().map(str::to_string).collect()
}

//! Context variables, worlds, V-ontologies and context formulas.
//!
//! A context formula for a query is a monotone-in-selectors DNF over
//! context literals whose models are exactly the worlds whose restricted
//! ontology entails the query. It is compiled once by labeled completion:
//! the completion rules of [`crate::elcore`] run with every derived
//! subsumption carrying the DNF of contexts under which it holds.

use std::cmp::Ordering;
use std::collections::{HashMap, VecDeque};

use crate::elcore::{self, AxiomIndex, Gci, NameId, Origin, RoleId, TOP};
use crate::error::{Error, Limits, Result};

/// Most context variables a [`VarSet`] may declare (worlds are `u64` masks).
pub const MAX_VARS: usize = 64;

/// Free variables up to which label insertion also checks semantic
/// coverage by enumeration.
const COVERAGE_ENUMERATION_VARS: usize = 12;

/// The declared context variables. Declaration order fixes indices and the
/// world order: the first variable is the most significant bit of a world
/// index.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VarSet {
    names: Vec<String>,
}

impl VarSet {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() > MAX_VARS {
            return Err(Error::TooManyVariables(names.len()));
        }
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() {
                return Err(Error::InvalidVariableName(n.clone()));
            }
            if names[..i].contains(n) {
                return Err(Error::DuplicateVariable(n.clone()));
            }
        }
        Ok(VarSet { names })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, var: usize) -> &str {
        &self.names[var]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.index(name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// All `2^n` worlds in index order.
    pub fn worlds(&self) -> impl Iterator<Item = World> + '_ {
        let n = self.len();
        (0..1usize << n).map(move |i| World::from_index(i, n))
    }
}

/// A literal `x` or `¬x` over a variable index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub var: usize,
    pub positive: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Self {
        Literal {
            var,
            positive: true,
        }
    }

    pub fn neg(var: usize) -> Self {
        Literal {
            var,
            positive: false,
        }
    }
}

fn reverse_bits(bits: u64, n: usize) -> u64 {
    if n == 0 {
        0
    } else {
        bits.reverse_bits() >> (64 - n)
    }
}

/// A total valuation of the context variables; bit `i` holds variable `i`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct World {
    bits: u64,
}

impl World {
    pub fn from_bits(bits: u64) -> Self {
        World { bits }
    }

    pub fn bits(self) -> u64 {
        self.bits
    }

    pub fn value(self, var: usize) -> bool {
        self.bits >> var & 1 == 1
    }

    /// The world at position `index` of a dense world vector over `n`
    /// variables (first variable most significant).
    pub fn from_index(index: usize, n: usize) -> Self {
        World {
            bits: reverse_bits(index as u64, n),
        }
    }

    pub fn index(self, n: usize) -> usize {
        reverse_bits(self.bits, n) as usize
    }

    /// Parses `x, !y, z`; every variable must be assigned exactly once.
    pub fn parse(text: &str, vars: &VarSet) -> Result<Self> {
        let ctx = Context::parse(text, vars)?;
        let all = if vars.len() == 64 {
            u64::MAX
        } else {
            (1u64 << vars.len()) - 1
        };
        if ctx.pos | ctx.neg != all {
            let missing = (0..vars.len())
                .find(|&v| (ctx.pos | ctx.neg) >> v & 1 == 0)
                .expect("some variable is unassigned");
            return Err(Error::InvalidFormula(format!(
                "world must assign every variable; `{}` is missing",
                vars.name(missing)
            )));
        }
        Ok(World { bits: ctx.pos })
    }

    pub fn render(self, vars: &VarSet) -> String {
        (0..vars.len())
            .map(|v| {
                if self.value(v) {
                    vars.name(v).to_string()
                } else {
                    format!("!{}", vars.name(v))
                }
            })
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// A consistent conjunction of literals.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Context {
    pos: u64,
    neg: u64,
}

impl Context {
    pub const fn empty() -> Self {
        Context { pos: 0, neg: 0 }
    }

    /// `None` when some variable occurs with both signs.
    pub fn new(literals: impl IntoIterator<Item = Literal>) -> Option<Self> {
        let mut ctx = Context::empty();
        for lit in literals {
            assert!(lit.var < MAX_VARS, "variable index out of range");
            if lit.positive {
                ctx.pos |= 1 << lit.var;
            } else {
                ctx.neg |= 1 << lit.var;
            }
        }
        (ctx.pos & ctx.neg == 0).then_some(ctx)
    }

    pub fn literal(lit: Literal) -> Self {
        Context::new([lit]).expect("a single literal is consistent")
    }

    /// Parses a comma list such as `x, !y`; empty text is the empty context.
    pub fn parse(text: &str, vars: &VarSet) -> Result<Self> {
        let mut lits = Vec::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (name, positive) = match item.strip_prefix('!') {
                Some(rest) => (rest.trim(), false),
                None => (item, true),
            };
            let var = vars.require(name)?;
            lits.push(Literal { var, positive });
        }
        Context::new(lits.iter().copied()).ok_or_else(|| {
            let clash = lits
                .iter()
                .find(|l| lits.iter().any(|m| m.var == l.var && m.positive != l.positive))
                .expect("inconsistency implies a clashing pair");
            Error::InconsistentContext(vars.name(clash.var).to_string())
        })
    }

    pub fn positive_mask(self) -> u64 {
        self.pos
    }

    pub fn negative_mask(self) -> u64 {
        self.neg
    }

    pub fn len(self) -> usize {
        (self.pos | self.neg).count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.pos | self.neg == 0
    }

    /// Literals in increasing variable order.
    pub fn literals(self) -> impl Iterator<Item = Literal> {
        let mask = self.pos | self.neg;
        (0..MAX_VARS)
            .filter(move |v| mask >> v & 1 == 1)
            .map(move |v| Literal {
                var: v,
                positive: self.pos >> v & 1 == 1,
            })
    }

    /// Highest variable index mentioned, if any.
    pub fn max_var(self) -> Option<usize> {
        let mask = self.pos | self.neg;
        (mask != 0).then(|| 63 - mask.leading_zeros() as usize)
    }

    pub fn holds_in(self, w: World) -> bool {
        w.bits & self.pos == self.pos && w.bits & self.neg == 0
    }

    /// Conjunction; `None` when the result would be inconsistent.
    pub fn conjoin(self, other: Context) -> Option<Context> {
        let c = Context {
            pos: self.pos | other.pos,
            neg: self.neg | other.neg,
        };
        (c.pos & c.neg == 0).then_some(c)
    }

    pub fn is_subset_of(self, other: Context) -> bool {
        self.pos & !other.pos == 0 && self.neg & !other.neg == 0
    }

    /// Canonical order: fewer literals first, then the literal sequences
    /// lexicographically (by variable, positive before negative).
    fn canonical_cmp(&self, other: &Context) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| {
            let key = |c: &Context| c.literals().map(|l| (l.var, !l.positive)).collect::<Vec<_>>();
            key(self).cmp(&key(other))
        })
    }

    pub fn render(self, vars: &VarSet) -> String {
        self.literals()
            .map(|l| render_literal(l, vars))
            .collect::<Vec<_>>()
            .join(",")
    }
}

fn render_literal(l: Literal, vars: &VarSet) -> String {
    if l.positive {
        vars.name(l.var).to_string()
    } else {
        format!("!{}", vars.name(l.var))
    }
}

/// A DNF over context literals in canonical form: every disjunct is
/// consistent, no disjunct contains another, and disjuncts are kept in
/// canonical order. No disjuncts is `false`; one empty disjunct is `true`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ContextFormula {
    disjuncts: Vec<Context>,
}

impl ContextFormula {
    pub fn falsum() -> Self {
        ContextFormula::default()
    }

    pub fn verum() -> Self {
        ContextFormula {
            disjuncts: vec![Context::empty()],
        }
    }

    pub fn from_disjuncts(disjuncts: impl IntoIterator<Item = Context>) -> Self {
        let mut f = ContextFormula::falsum();
        for d in disjuncts {
            f.insert(d);
        }
        f
    }

    pub fn disjuncts(&self) -> &[Context] {
        &self.disjuncts
    }

    /// Syntactically `false` (no disjuncts).
    pub fn is_false(&self) -> bool {
        self.disjuncts.is_empty()
    }

    /// Syntactically `true` (an empty disjunct).
    pub fn is_true(&self) -> bool {
        self.disjuncts.first().is_some_and(|d| d.is_empty())
    }

    /// Adds `d` as a disjunct unless an existing disjunct is contained in
    /// it; drops disjuncts that contain `d`. Returns whether it was added.
    pub fn insert(&mut self, d: Context) -> bool {
        if self.disjuncts.iter().any(|e| e.is_subset_of(d)) {
            return false;
        }
        self.disjuncts.retain(|e| !d.is_subset_of(*e));
        let at = self
            .disjuncts
            .binary_search_by(|e| e.canonical_cmp(&d))
            .unwrap_or_else(|i| i);
        self.disjuncts.insert(at, d);
        true
    }

    pub fn or(&self, other: &ContextFormula) -> ContextFormula {
        let mut out = self.clone();
        for d in &other.disjuncts {
            out.insert(*d);
        }
        out
    }

    /// Pairwise conjunction of disjuncts, dropping inconsistent ones.
    pub fn and(&self, other: &ContextFormula) -> ContextFormula {
        let mut out = ContextFormula::falsum();
        for a in &self.disjuncts {
            for b in &other.disjuncts {
                if let Some(c) = a.conjoin(*b) {
                    out.insert(c);
                }
            }
        }
        out
    }

    pub fn eval(&self, w: World) -> bool {
        self.disjuncts.iter().any(|d| d.holds_in(w))
    }

    /// Whether every world satisfying `d` already satisfies `self`, decided
    /// by enumerating the completions of `d` over `nvars` variables. Returns
    /// `false` without deciding when there are too many completions.
    pub fn covers(&self, d: Context, nvars: usize) -> bool {
        if self.disjuncts.iter().any(|e| e.is_subset_of(d)) {
            return true;
        }
        let fixed = d.pos | d.neg;
        let free: Vec<usize> = (0..nvars).filter(|v| fixed >> v & 1 == 0).collect();
        if free.len() > COVERAGE_ENUMERATION_VARS {
            return false;
        }
        (0..1u64 << free.len()).all(|assignment| {
            let mut bits = d.pos;
            for (k, v) in free.iter().enumerate() {
                if assignment >> k & 1 == 1 {
                    bits |= 1 << v;
                }
            }
            self.eval(World::from_bits(bits))
        })
    }

    /// Highest variable index mentioned, if any.
    pub fn max_var(&self) -> Option<usize> {
        self.disjuncts.iter().filter_map(|d| d.max_var()).max()
    }

    /// Renders as `(x & y) | (!x & z)`; `true` / `false` for the constants.
    pub fn render(&self, vars: &VarSet) -> String {
        if self.is_false() {
            return "false".to_string();
        }
        if self.is_true() {
            return "true".to_string();
        }
        let parts: Vec<String> = self
            .disjuncts
            .iter()
            .map(|d| {
                let lits: Vec<String> = d.literals().map(|l| render_literal(l, vars)).collect();
                if lits.len() == 1 || self.disjuncts.len() == 1 {
                    lits.join(" & ")
                } else {
                    format!("({})", lits.join(" & "))
                }
            })
            .collect();
        parts.join(" | ")
    }

    /// Disjuncts as lists of literal strings, for structured output.
    pub fn literal_lists(&self, vars: &VarSet) -> Vec<Vec<String>> {
        self.disjuncts
            .iter()
            .map(|d| d.literals().map(|l| render_literal(l, vars)).collect())
            .collect()
    }
}

fn check_formula_vars(phi: &ContextFormula, nvars: usize) -> Result<()> {
    match phi.max_var() {
        Some(v) if v >= nvars => Err(Error::VariableMismatch(format!(
            "formula mentions variable #{v} but only {nvars} are declared"
        ))),
        _ => Ok(()),
    }
}

/// Worlds over `vars` satisfying `phi`, in index order.
pub fn satisfying_worlds(phi: &ContextFormula, vars: &VarSet, cap: usize) -> Result<Vec<World>> {
    Limits::check("world enumeration", vars.len(), cap)?;
    check_formula_vars(phi, vars.len())?;
    Ok(vars.worlds().filter(|w| phi.eval(*w)).collect())
}

/// Whether two formulas have the same models over `vars`.
pub fn equivalent(a: &ContextFormula, b: &ContextFormula, vars: &VarSet, cap: usize) -> Result<bool> {
    Limits::check("world enumeration", vars.len(), cap)?;
    check_formula_vars(a, vars.len())?;
    check_formula_vars(b, vars.len())?;
    Ok(vars.worlds().all(|w| a.eval(w) == b.eval(w)))
}

/// A general propositional formula over context variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PropFormula {
    Const(bool),
    Var(usize),
    Not(Box<PropFormula>),
    And(Vec<PropFormula>),
    Or(Vec<PropFormula>),
}

impl PropFormula {
    /// Parses formulas built from variable names, `true`, `false`, `!`,
    /// `&`, `|` and parentheses (`¬`, `∧`, `∨` are accepted as well).
    pub fn parse(text: &str, vars: &VarSet) -> Result<Self> {
        let tokens = tokenize(text)?;
        let mut p = PropParser {
            tokens: &tokens,
            pos: 0,
            vars,
        };
        let f = p.or()?;
        if p.pos != tokens.len() {
            return Err(Error::InvalidFormula(format!(
                "unexpected `{}`",
                tokens[p.pos].text()
            )));
        }
        Ok(f)
    }

    pub fn eval(&self, w: World) -> bool {
        match self {
            PropFormula::Const(b) => *b,
            PropFormula::Var(v) => w.value(*v),
            PropFormula::Not(f) => !f.eval(w),
            PropFormula::And(fs) => fs.iter().all(|f| f.eval(w)),
            PropFormula::Or(fs) => fs.iter().any(|f| f.eval(w)),
        }
    }

    /// Converts to canonical DNF via negation normal form.
    pub fn to_context_formula(&self) -> ContextFormula {
        self.dnf(false)
    }

    fn dnf(&self, negated: bool) -> ContextFormula {
        match (self, negated) {
            (PropFormula::Const(b), _) => {
                if *b != negated {
                    ContextFormula::verum()
                } else {
                    ContextFormula::falsum()
                }
            }
            (PropFormula::Var(v), _) => ContextFormula::from_disjuncts([Context::literal(Literal {
                var: *v,
                positive: !negated,
            })]),
            (PropFormula::Not(f), _) => f.dnf(!negated),
            (PropFormula::And(fs), false) | (PropFormula::Or(fs), true) => fs
                .iter()
                .fold(ContextFormula::verum(), |acc, f| acc.and(&f.dnf(negated))),
            (PropFormula::Or(fs), false) | (PropFormula::And(fs), true) => fs
                .iter()
                .fold(ContextFormula::falsum(), |acc, f| acc.or(&f.dnf(negated))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Not,
    And,
    Or,
    Open,
    Close,
}

impl Tok {
    fn text(&self) -> String {
        match self {
            Tok::Ident(s) => s.clone(),
            Tok::Not => "!".into(),
            Tok::And => "&".into(),
            Tok::Or => "|".into(),
            Tok::Open => "(".into(),
            Tok::Close => ")".into(),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '!' | '~' | '¬' => {
                chars.next();
                out.push(Tok::Not);
            }
            '&' | '∧' => {
                chars.next();
                out.push(Tok::And);
            }
            '|' | '∨' => {
                chars.next();
                out.push(Tok::Or);
            }
            '(' => {
                chars.next();
                out.push(Tok::Open);
            }
            ')' => {
                chars.next();
                out.push(Tok::Close);
            }
            c if c.is_ascii_alphanumeric() || c == '_' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                out.push(Tok::Ident(s));
            }
            other => {
                return Err(Error::InvalidFormula(format!("unexpected character `{other}`")))
            }
        }
    }
    Ok(out)
}

struct PropParser<'a> {
    tokens: &'a [Tok],
    pos: usize,
    vars: &'a VarSet,
}

impl PropParser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn or(&mut self) -> Result<PropFormula> {
        let mut parts = vec![self.and()?];
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            parts.push(self.and()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            PropFormula::Or(parts)
        })
    }

    fn and(&mut self) -> Result<PropFormula> {
        let mut parts = vec![self.unary()?];
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            PropFormula::And(parts)
        })
    }

    fn unary(&mut self) -> Result<PropFormula> {
        match self.peek().cloned() {
            Some(Tok::Not) => {
                self.pos += 1;
                Ok(PropFormula::Not(Box::new(self.unary()?)))
            }
            Some(Tok::Open) => {
                self.pos += 1;
                let f = self.or()?;
                if self.peek() != Some(&Tok::Close) {
                    return Err(Error::InvalidFormula("missing `)`".into()));
                }
                self.pos += 1;
                Ok(f)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match name.as_str() {
                    "true" => Ok(PropFormula::Const(true)),
                    "false" => Ok(PropFormula::Const(false)),
                    _ => Ok(PropFormula::Var(self.vars.require(&name)?)),
                }
            }
            Some(t) => Err(Error::InvalidFormula(format!("unexpected `{}`", t.text()))),
            None => Err(Error::InvalidFormula("unexpected end of formula".into())),
        }
    }
}

/// An axiom together with the context in which it holds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VAxiom {
    pub axiom: Gci,
    pub context: Context,
}

impl VAxiom {
    pub fn new(axiom: Gci, context: Context) -> Self {
        VAxiom { axiom, context }
    }
}

/// A finite set of context-labeled axioms over declared variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VOntology {
    vars: VarSet,
    axioms: Vec<VAxiom>,
}

impl VOntology {
    pub fn new(vars: VarSet, axioms: Vec<VAxiom>) -> Result<Self> {
        for ax in &axioms {
            if let Some(v) = ax.context.max_var() {
                if v >= vars.len() {
                    return Err(Error::VariableMismatch(format!(
                        "context of `{}` mentions undeclared variable #{v}",
                        ax.axiom
                    )));
                }
            }
        }
        Ok(VOntology { vars, axioms })
    }

    pub fn vars(&self) -> &VarSet {
        &self.vars
    }

    pub fn axioms(&self) -> &[VAxiom] {
        &self.axioms
    }

    /// The same ontology with contexts re-indexed onto `target`, which must
    /// declare every variable of `self`.
    pub fn reindexed(&self, target: &VarSet) -> Result<VOntology> {
        let map: Vec<usize> = self
            .vars
            .names()
            .iter()
            .map(|n| target.require(n))
            .collect::<Result<_>>()?;
        let axioms = self
            .axioms
            .iter()
            .map(|ax| {
                let lits = ax.context.literals().map(|l| Literal {
                    var: map[l.var],
                    positive: l.positive,
                });
                VAxiom::new(
                    ax.axiom.clone(),
                    Context::new(lits).expect("re-indexing preserves consistency"),
                )
            })
            .collect();
        VOntology::new(target.clone(), axioms)
    }

    /// The axioms whose context holds in `w`.
    pub fn restrict(&self, w: World) -> Vec<Gci> {
        self.axioms
            .iter()
            .filter(|ax| ax.context.holds_in(w))
            .map(|ax| ax.axiom.clone())
            .collect()
    }

    /// Compiles the context formula of `query` by labeled completion.
    pub fn context_formula(&self, query: &Gci) -> ContextFormula {
        let (tbox, q_lhs, q_rhs) = elcore::normalize_with_query(
            self.axioms
                .iter()
                .enumerate()
                .map(|(i, ax)| (&ax.axiom, Origin::Source(i))),
            query,
        );
        let labels: Vec<ContextFormula> = tbox
            .origins
            .iter()
            .map(|o| match o {
                Origin::Source(i) => ContextFormula::from_disjuncts([self.axioms[*i].context]),
                Origin::Definition | Origin::Query => ContextFormula::verum(),
            })
            .collect();
        let index = AxiomIndex::build(&tbox.axioms);
        let mut sat = LabeledSaturation::new(&index, &labels, tbox.num_names(), self.vars.len());
        sat.init(q_lhs);
        sat.run();
        sat.label(q_lhs, q_rhs)
    }

    /// Brute-force twin of [`VOntology::context_formula`]: the worlds whose
    /// restricted ontology entails `query`, each decided by classical
    /// entailment.
    pub fn entailing_worlds(&self, query: &Gci, cap: usize) -> Result<Vec<World>> {
        Limits::check("world enumeration", self.vars.len(), cap)?;
        Ok(self
            .vars
            .worlds()
            .filter(|w| elcore::entails(&self.restrict(*w), query))
            .collect())
    }
}

/// Completion with context-formula labels on subsumptions and links.
struct LabeledSaturation<'a> {
    index: &'a AxiomIndex,
    labels: &'a [ContextFormula],
    nvars: usize,
    subsumers: Vec<Option<HashMap<NameId, ContextFormula>>>,
    links: HashMap<(RoleId, NameId, NameId), ContextFormula>,
    preds: HashMap<(RoleId, NameId), Vec<NameId>>,
    queue: VecDeque<Step>,
}

/// A label that grew; `delta` holds only the newly added disjuncts.
enum Step {
    Sub(NameId, NameId, ContextFormula),
    Link(RoleId, NameId, NameId, ContextFormula),
}

/// Inserts the disjuncts of `candidate` that add worlds to `label`;
/// returns those that were added.
fn absorb(label: &mut ContextFormula, candidate: &ContextFormula, nvars: usize) -> ContextFormula {
    let mut added = ContextFormula::falsum();
    for &d in candidate.disjuncts() {
        if !label.covers(d, nvars) && label.insert(d) {
            added.insert(d);
        }
    }
    added
}

impl<'a> LabeledSaturation<'a> {
    fn new(
        index: &'a AxiomIndex,
        labels: &'a [ContextFormula],
        num_names: usize,
        nvars: usize,
    ) -> Self {
        LabeledSaturation {
            index,
            labels,
            nvars,
            subsumers: vec![None; num_names],
            links: HashMap::new(),
            preds: HashMap::new(),
            queue: VecDeque::new(),
        }
    }

    fn init(&mut self, a: NameId) {
        if self.subsumers[a as usize].is_none() {
            self.subsumers[a as usize] = Some(HashMap::new());
            self.add_sub(a, a, ContextFormula::verum());
            self.add_sub(a, TOP, ContextFormula::verum());
        }
    }

    fn label(&self, a: NameId, b: NameId) -> ContextFormula {
        self.subsumers[a as usize]
            .as_ref()
            .and_then(|m| m.get(&b))
            .cloned()
            .unwrap_or_default()
    }

    fn add_sub(&mut self, a: NameId, b: NameId, candidate: ContextFormula) {
        if candidate.is_false() {
            return;
        }
        let nvars = self.nvars;
        let map = self.subsumers[a as usize]
            .as_mut()
            .expect("subsumers added only to initialized names");
        let label = map.entry(b).or_default();
        let added = absorb(label, &candidate, nvars);
        if !added.is_false() {
            self.queue.push_back(Step::Sub(a, b, added));
        }
    }

    fn add_link(&mut self, r: RoleId, a: NameId, b: NameId, candidate: ContextFormula) {
        if candidate.is_false() {
            return;
        }
        let nvars = self.nvars;
        let label = self.links.entry((r, a, b)).or_default();
        let first = label.is_false();
        let added = absorb(label, &candidate, nvars);
        if added.is_false() {
            return;
        }
        if first {
            self.preds.entry((r, b)).or_default().push(a);
            self.init(b);
        }
        self.queue.push_back(Step::Link(r, a, b, added));
    }

    fn run(&mut self) {
        let index = self.index;
        let labels = self.labels;
        while let Some(step) = self.queue.pop_front() {
            match step {
                Step::Sub(a, b, delta) => {
                    if let Some(rules) = index.sub.get(&b) {
                        for &(c, ax) in rules {
                            self.add_sub(a, c, delta.and(&labels[ax]));
                        }
                    }
                    if let Some(rules) = index.conj.get(&b) {
                        for &(other, c, ax) in rules {
                            let sigma = self.label(a, other);
                            if !sigma.is_false() {
                                self.add_sub(a, c, delta.and(&sigma).and(&labels[ax]));
                            }
                        }
                    }
                    if let Some(rules) = index.exists_rhs.get(&b) {
                        for &(r, c, ax) in rules {
                            self.add_link(r, a, c, delta.and(&labels[ax]));
                        }
                    }
                    if let Some(rules) = index.exists_lhs.get(&b) {
                        for &(r, c, ax) in rules {
                            let preds = self.preds.get(&(r, a)).cloned().unwrap_or_default();
                            for p in preds {
                                let rho = self.links[&(r, p, a)].clone();
                                self.add_sub(p, c, delta.and(&rho).and(&labels[ax]));
                            }
                        }
                    }
                }
                Step::Link(r, a, b, delta) => {
                    let fillers: Vec<(NameId, ContextFormula)> = self.subsumers[b as usize]
                        .as_ref()
                        .map(|m| m.iter().map(|(k, v)| (*k, v.clone())).collect())
                        .unwrap_or_default();
                    for (filler, sigma) in fillers {
                        if let Some(rules) = index.exists_lhs.get(&filler) {
                            for &(role, c, ax) in rules {
                                if role == r {
                                    self.add_sub(a, c, delta.and(&sigma).and(&labels[ax]));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elcore::Concept;

    fn xyz() -> VarSet {
        VarSet::new(["x", "y", "z"]).unwrap()
    }

    fn ctx(text: &str, vars: &VarSet) -> Context {
        Context::parse(text, vars).unwrap()
    }

    fn example_ontology() -> VOntology {
        let vars = xyz();
        let a = Concept::atom;
        let use_ = |c| Concept::exists("use", c);
        let axioms = vec![
            (Gci::new(a("Comp"), Concept::and(use_(a("Mem")), use_(a("CPU")))), ""),
            (Gci::new(use_(a("FailMem")), a("FailComp")), "x"),
            (Gci::new(use_(a("FailCPU")), a("FailComp")), "x"),
            (
                Gci::new(
                    Concept::and(use_(a("FailMem")), use_(a("FailCPU"))),
                    a("FailComp"),
                ),
                "!x",
            ),
            (Gci::atomic("Mem", "FailMem"), "y"),
            (Gci::atomic("CPU", "FailCPU"), "z"),
        ]
        .into_iter()
        .map(|(g, c)| VAxiom::new(g, ctx(c, &vars)))
        .collect();
        VOntology::new(vars, axioms).unwrap()
    }

    #[test]
    fn world_index_is_msb_first() {
        let w = World::from_index(0b100, 3);
        assert!(w.value(0) && !w.value(1) && !w.value(2));
        assert_eq!(w.index(3), 0b100);
        for i in 0..8 {
            assert_eq!(World::from_index(i, 3).index(3), i);
        }
    }

    #[test]
    fn restrict_example_world() {
        let o = example_ontology();
        let w = World::parse("x,!y,z", o.vars()).unwrap();
        let restricted = o.restrict(w);
        let expected: Vec<Gci> = [0, 1, 2, 5]
            .iter()
            .map(|&i| o.axioms()[i].axiom.clone())
            .collect();
        assert_eq!(restricted, expected);
    }

    #[test]
    fn restrict_edge_cases() {
        let vars = VarSet::new(["x"]).unwrap();
        let o = VOntology::new(
            vars.clone(),
            vec![VAxiom::new(Gci::atomic("A", "B"), ctx("x", &vars))],
        )
        .unwrap();
        assert!(o.restrict(World::parse("!x", &vars).unwrap()).is_empty());
        let always = VOntology::new(
            vars.clone(),
            vec![VAxiom::new(Gci::atomic("A", "B"), Context::empty())],
        )
        .unwrap();
        for w in vars.worlds() {
            assert_eq!(always.restrict(w).len(), 1);
        }
    }

    #[test]
    fn example_context_formula() {
        let o = example_ontology();
        let phi = o.context_formula(&Gci::atomic("Comp", "FailComp"));
        let vars = o.vars();
        assert_eq!(phi.render(vars), "(x & y) | (x & z) | (!x & y & z)");
        let expected = PropFormula::parse("(x & (y | z)) | (!x & y & z)", vars)
            .unwrap()
            .to_context_formula();
        assert!(equivalent(&phi, &expected, vars, 20).unwrap());
        assert_eq!(phi, expected);
        assert!(phi.eval(World::parse("x,!y,z", vars).unwrap()));
        assert!(!phi.eval(World::parse("!x,y,!z", vars).unwrap()));
    }

    #[test]
    fn single_axiom_formula() {
        let vars = VarSet::new(["x"]).unwrap();
        let o = VOntology::new(
            vars.clone(),
            vec![VAxiom::new(Gci::atomic("A", "B"), ctx("x", &vars))],
        )
        .unwrap();
        assert_eq!(o.context_formula(&Gci::atomic("A", "B")).render(&vars), "x");
        assert!(o.context_formula(&Gci::atomic("A", "A")).is_true());
        assert!(o.context_formula(&Gci::atomic("B", "A")).is_false());
    }

    #[test]
    fn satisfying_worlds_of_example_formula() {
        let vars = xyz();
        let phi = PropFormula::parse("(x & (y | z)) | (!x & y & z)", &vars)
            .unwrap()
            .to_context_formula();
        let worlds: Vec<String> = satisfying_worlds(&phi, &vars, 20)
            .unwrap()
            .into_iter()
            .map(|w| w.render(&vars))
            .collect();
        assert_eq!(worlds, vec!["!x,y,z", "x,!y,z", "x,y,!z", "x,y,z"]);
    }

    #[test]
    fn tautology_with_two_disjuncts() {
        let vars = VarSet::new(["x"]).unwrap();
        let phi = ContextFormula::from_disjuncts([ctx("x", &vars), ctx("!x", &vars)]);
        assert_eq!(phi.disjuncts().len(), 2);
        assert_eq!(satisfying_worlds(&phi, &vars, 20).unwrap().len(), 2);
        assert!(equivalent(&phi, &ContextFormula::verum(), &vars, 20).unwrap());
        assert!(satisfying_worlds(&ContextFormula::verum(), &vars, 20).unwrap().len() == 2);
    }

    #[test]
    fn constants_and_order() {
        let vars = VarSet::new(["x", "y"]).unwrap();
        assert!(!equivalent(&ContextFormula::falsum(), &ContextFormula::verum(), &vars, 20).unwrap());
        let a = ContextFormula::from_disjuncts([ctx("x", &vars), ctx("y", &vars)]);
        let b = ContextFormula::from_disjuncts([ctx("y", &vars), ctx("x", &vars)]);
        assert_eq!(a, b);
        assert!(equivalent(&a, &b, &vars, 20).unwrap());
        for w in vars.worlds() {
            assert!(!ContextFormula::falsum().eval(w));
        }
    }

    #[test]
    fn enumeration_cap() {
        let vars = VarSet::new((0..21).map(|i| format!("v{i}"))).unwrap();
        assert!(matches!(
            satisfying_worlds(&ContextFormula::verum(), &vars, 20),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn inconsistent_context_is_rejected() {
        let vars = VarSet::new(["x"]).unwrap();
        assert_eq!(
            Context::parse("x, !x", &vars),
            Err(Error::InconsistentContext("x".into()))
        );
        assert!(Context::parse("y", &vars).is_err());
    }

    #[test]
    fn insertion_keeps_minimal_disjuncts() {
        let vars = xyz();
        let mut f = ContextFormula::from_disjuncts([ctx("x,y", &vars)]);
        assert!(!f.insert(ctx("x,y,z", &vars)));
        assert!(f.insert(ctx("x", &vars)));
        assert_eq!(f.render(&vars), "x");
        let g = f.clone();
        assert_eq!(ContextFormula::from_disjuncts(g.disjuncts().iter().copied()), f);
    }

    #[test]
    fn coverage_is_semantic() {
        let vars = VarSet::new(["x", "y"]).unwrap();
        let f = ContextFormula::from_disjuncts([ctx("x", &vars), ctx("!x", &vars)]);
        assert!(f.covers(ctx("y", &vars), 2));
        let g = ContextFormula::from_disjuncts([ctx("x", &vars)]);
        assert!(!g.covers(ctx("y", &vars), 2));
    }

    #[test]
    fn reindexing_onto_larger_varset() {
        let small = VarSet::new(["y"]).unwrap();
        let o = VOntology::new(
            small.clone(),
            vec![VAxiom::new(Gci::atomic("A", "B"), ctx("!y", &small))],
        )
        .unwrap();
        let big = xyz();
        let r = o.reindexed(&big).unwrap();
        assert_eq!(r.axioms()[0].context, ctx("!y", &big));
        assert!(o.reindexed(&VarSet::new(["x"]).unwrap()).is_err());
    }
}

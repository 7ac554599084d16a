//! Query answering over a knowledge base: static, conditional, timed,
//! time-bounded, evidence-conditioned and eventual probabilistic
//! entailment.
//!
//! The context formula of a query is compiled once ([`Reasoner::compile`])
//! and reused by every time computation. Each route has a brute-force twin
//! that recomputes the same number without the shortcut it checks.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use crate::bayes::WorldDistribution;
use crate::context::{Context, ContextFormula, Literal, VOntology, VarSet, World};
use crate::dbn::{self, Dbn, TransitionMatrix};
use crate::elcore::{self, Gci};
use crate::error::{Error, Limits, Result};
use crate::markov::{self, ChainAnalysis};
use crate::parallel::{self, Strategy};

/// Default horizon for the lower bound of eventual entailment.
pub const DEFAULT_HORIZON: usize = 32;

/// A dynamic Bayesian network together with a V-ontology over its
/// variables.
#[derive(Clone, Debug, PartialEq)]
pub struct KnowledgeBase {
    dbn: Dbn,
    ontology: VOntology,
}

impl KnowledgeBase {
    /// The ontology's variables must all be declared by the network; its
    /// contexts are re-indexed onto the network's variable order.
    pub fn new(dbn: Dbn, ontology: VOntology) -> Result<Self> {
        let ontology = ontology.reindexed(dbn.vars())?;
        Ok(KnowledgeBase { dbn, ontology })
    }

    pub fn dbn(&self) -> &Dbn {
        &self.dbn
    }

    pub fn ontology(&self) -> &VOntology {
        &self.ontology
    }

    pub fn vars(&self) -> &VarSet {
        self.dbn.vars()
    }
}

/// A query with its compiled context formula.
#[derive(Clone, Debug, PartialEq)]
pub struct CompiledQuery {
    pub query: Gci,
    pub formula: ContextFormula,
}

impl CompiledQuery {
    /// Which world indices satisfy the formula.
    fn mask(&self, n: usize) -> Vec<bool> {
        (0..1usize << n)
            .map(|i| self.formula.eval(World::from_index(i, n)))
            .collect()
    }
}

/// Literals pinned to slices of the unraveled network.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TimedEvidence {
    /// (slice, variable) → value
    literals: BTreeMap<(usize, usize), bool>,
}

impl TimedEvidence {
    pub fn new() -> Self {
        TimedEvidence::default()
    }

    pub fn insert(&mut self, var: usize, slice: usize, value: bool, vars: &VarSet) -> Result<()> {
        if slice == 0 {
            return Err(Error::InvalidTime);
        }
        if var >= vars.len() {
            return Err(Error::UnknownVariable(format!("#{var}")));
        }
        match self.literals.insert((slice, var), value) {
            Some(old) if old != value => Err(Error::InconsistentEvidence(format!(
                "{}@{slice}",
                vars.name(var)
            ))),
            _ => Ok(()),
        }
    }

    /// Parses `x@1=1, y@3=0`.
    pub fn parse(text: &str, vars: &VarSet) -> Result<Self> {
        let mut e = TimedEvidence::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let bad = || Error::InvalidFormula(format!("malformed evidence `{item}`, expected `var@slice=0|1`"));
            let (lhs, value) = item.split_once('=').ok_or_else(bad)?;
            let (name, slice) = lhs.split_once('@').ok_or_else(bad)?;
            let slice: usize = slice.trim().parse().map_err(|_| bad())?;
            let value = match value.trim() {
                "1" | "true" => true,
                "0" | "false" => false,
                _ => return Err(bad()),
            };
            let var = vars.require(name.trim())?;
            e.insert(var, slice, value, vars)?;
        }
        Ok(e)
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    /// Latest slice mentioned (0 when empty).
    pub fn max_slice(&self) -> usize {
        self.literals.keys().map(|(s, _)| *s).max().unwrap_or(0)
    }

    /// `(var, slice, value)` triples ordered by slice, then variable.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, bool)> + '_ {
        self.literals.iter().map(|(&(s, v), &b)| (v, s, b))
    }

    /// The literals pinned to `slice`.
    pub fn at_slice(&self, slice: usize) -> Context {
        Context::new(
            self.literals
                .range((slice, 0)..(slice + 1, 0))
                .map(|(&(_, var), &positive)| Literal { var, positive }),
        )
        .expect("one value per (slice, variable)")
    }

    /// The evidence as a context over an unraveled network with `n`
    /// variables per slice.
    pub fn unrolled_context(&self, n: usize) -> Context {
        Context::new(self.literals.iter().map(|(&(s, v), &positive)| Literal {
            var: (s - 1) * n + v,
            positive,
        }))
        .expect("one value per (slice, variable)")
    }

    pub fn render(&self, vars: &VarSet) -> String {
        self.iter()
            .map(|(v, s, b)| format!("{}@{s}={}", vars.name(v), b as u8))
            .collect::<Vec<_>>()
            .join(",")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventualKind {
    /// Every stationary distribution gives the formula positive mass, so
    /// the consequence is eventually observed with probability one.
    CertainOne,
    /// Some stationary distribution gives the formula no mass; the limit
    /// depends on the initial distribution and only a lower bound is known.
    Indeterminate,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EventualResult {
    pub kind: EventualKind,
    pub delta_value: f64,
    /// Probability of observing the consequence within `horizon_used` steps.
    pub lower_bound: f64,
    pub horizon_used: usize,
}

impl EventualResult {
    /// The limit probability when it is determined.
    pub fn probability(&self) -> Option<f64> {
        match self.kind {
            EventualKind::CertainOne => Some(1.0),
            EventualKind::Indeterminate => None,
        }
    }
}

/// Answers queries against one knowledge base. The transition matrix is
/// built on first use and shared by later queries.
pub struct Reasoner<'kb> {
    kb: &'kb KnowledgeBase,
    limits: Limits,
    strategy: Strategy,
    matrix: OnceLock<TransitionMatrix>,
}

impl<'kb> Reasoner<'kb> {
    pub fn new(kb: &'kb KnowledgeBase) -> Self {
        Reasoner::with_options(kb, Limits::default(), Strategy::default())
    }

    pub fn with_options(kb: &'kb KnowledgeBase, limits: Limits, strategy: Strategy) -> Self {
        Reasoner {
            kb,
            limits,
            strategy,
            matrix: OnceLock::new(),
        }
    }

    pub fn kb(&self) -> &KnowledgeBase {
        self.kb
    }

    pub fn limits(&self) -> &Limits {
        &self.limits
    }

    fn n(&self) -> usize {
        self.kb.vars().len()
    }

    pub fn compile(&self, query: &Gci) -> CompiledQuery {
        CompiledQuery {
            query: query.clone(),
            formula: self.kb.ontology.context_formula(query),
        }
    }

    pub fn transition_matrix(&self) -> Result<&TransitionMatrix> {
        if let Some(m) = self.matrix.get() {
            return Ok(m);
        }
        let m = dbn::transition_matrix(self.kb.dbn.transition(), &self.limits, self.strategy)?;
        Ok(self.matrix.get_or_init(|| m))
    }

    pub fn analysis(&self) -> Result<ChainAnalysis> {
        Ok(markov::analyze(self.transition_matrix()?))
    }

    /// Probability of the query under the initial network.
    pub fn prob(&self, q: &CompiledQuery) -> Result<f64> {
        self.kb
            .dbn
            .initial()
            .formula_prob_with(&q.formula, self.limits.enumeration_vars, self.strategy)
    }

    /// Twin of [`Reasoner::prob`]: sums the initial probability of every
    /// world whose restricted ontology entails the query.
    pub fn prob_by_entailment(&self, query: &Gci) -> Result<f64> {
        let n = self.n();
        Limits::check("world enumeration", n, self.limits.enumeration_vars)?;
        let bn = self.kb.dbn.initial();
        let ont = &self.kb.ontology;
        Ok(parallel::sum_range(self.strategy, 1 << n, |i| {
            let w = World::from_index(i, n);
            if elcore::entails(&ont.restrict(w), query) {
                bn.world_prob(w)
            } else {
                0.0
            }
        }))
    }

    /// `P(c | κ)` under the initial network.
    pub fn prob_given(&self, q: &CompiledQuery, kappa: Context) -> Result<f64> {
        let bn = self.kb.dbn.initial();
        let cap = self.limits.enumeration_vars;
        let condition = ContextFormula::from_disjuncts([kappa]);
        let p_kappa = bn.formula_prob_with(&condition, cap, self.strategy)?;
        if p_kappa <= 0.0 {
            return Err(Error::ZeroProbabilityCondition);
        }
        let joint = bn.formula_prob_with(&q.formula.and(&condition), cap, self.strategy)?;
        Ok(joint / p_kappa)
    }

    /// Forward filtering from the initial distribution for `t` slices,
    /// zeroing every world rejected by `keep(slice, world_index)`.
    fn filter(&self, t: usize, keep: impl Fn(usize, usize) -> bool) -> Result<Vec<f64>> {
        if t == 0 {
            return Err(Error::InvalidTime);
        }
        let n = self.n();
        let mut v = dbn::initial_distribution(self.kb.dbn.initial(), &self.limits, self.strategy)?
            .into_probs();
        zero_rejected(&mut v, |i| keep(1, i));
        if t > 1 {
            let m = self.transition_matrix()?;
            debug_assert_eq!(m.nvars(), n);
            for slice in 2..=t {
                v = dbn::step_vector(&v, m, self.strategy);
                zero_rejected(&mut v, |i| keep(slice, i));
            }
        }
        Ok(v)
    }

    /// `P(c[t])` by forward filtering.
    pub fn prob_at(&self, q: &CompiledQuery, t: usize) -> Result<f64> {
        let dist = self.slice_distribution(t)?;
        Ok(dist.mass(&q.formula))
    }

    pub fn slice_distribution(&self, t: usize) -> Result<WorldDistribution> {
        let v = self.filter(t, |_, _| true)?;
        WorldDistribution::new(self.n(), v)
    }

    /// `P(c[t])` as the sum over slice-`t` worlds whose restricted ontology
    /// entails the query, each decided by classical entailment.
    pub fn prob_at_by_entailment(&self, query: &Gci, t: usize) -> Result<f64> {
        let dist = self.kb.dbn.slice_marginal(t, &self.limits, self.strategy)?;
        let n = self.n();
        let ont = &self.kb.ontology;
        Ok(dist
            .probs()
            .iter()
            .enumerate()
            .filter(|(i, _)| elcore::entails(&ont.restrict(World::from_index(*i, n)), query))
            .map(|(_, p)| p)
            .sum())
    }

    /// `P(c[t])` by variable elimination on the network unraveled to `t`.
    pub fn prob_at_by_elimination(&self, q: &CompiledQuery, t: usize) -> Result<f64> {
        let n = self.n();
        let unrolled = self.kb.dbn.unravel(t, &self.limits)?;
        let targets: Vec<usize> = ((t - 1) * n..t * n).collect();
        let marginal = unrolled.marginal(&targets, Context::empty())?;
        Ok(self
            .kb
            .vars()
            .worlds()
            .filter(|w| q.formula.eval(*w))
            .map(|w| marginal.prob_of(w.bits() << ((t - 1) * n)))
            .sum())
    }

    /// `P(c[1:t])` by masked forward filtering: the mass that first meets
    /// the formula at each slice is banked and removed from the vector.
    pub fn prob_within(&self, q: &CompiledQuery, t: usize) -> Result<f64> {
        if t == 0 {
            return Err(Error::InvalidTime);
        }
        let mask = q.mask(self.n());
        let mut v = dbn::initial_distribution(self.kb.dbn.initial(), &self.limits, self.strategy)?
            .into_probs();
        let mut hit = bank(&mut v, &mask);
        if t > 1 {
            let m = self.transition_matrix()?;
            for _ in 2..=t {
                v = dbn::step_vector(&v, m, self.strategy);
                hit += bank(&mut v, &mask);
            }
        }
        Ok(hit)
    }

    /// Twin of [`Reasoner::prob_within`]: enumerates every valuation of
    /// the unraveled network and sums those that satisfy the formula at
    /// some slice.
    pub fn prob_within_oracle(&self, q: &CompiledQuery, t: usize) -> Result<f64> {
        let n = self.n();
        let unrolled = self.kb.dbn.unravel(t, &self.limits)?;
        let total = t * n;
        let slice_mask = if n == 0 { 0 } else { (1u64 << n) - 1 };
        Ok(parallel::sum_range(self.strategy, 1 << total, |bits| {
            let bits = bits as u64;
            let hit = (0..t).any(|i| {
                q.formula
                    .eval(World::from_bits(bits >> (i * n) & slice_mask))
            });
            if hit {
                unrolled.world_prob(World::from_bits(bits))
            } else {
                0.0
            }
        }))
    }

    /// `P(c[t] | E)` by forward filtering with per-slice evidence masking
    /// and a final normalization.
    pub fn prob_at_evidence(&self, q: &CompiledQuery, t: usize, e: &TimedEvidence) -> Result<f64> {
        if t == 0 {
            return Err(Error::InvalidTime);
        }
        if e.max_slice() > t {
            return Err(Error::EvidenceBeyondTime {
                slice: e.max_slice(),
                time: t,
            });
        }
        let n = self.n();
        let per_slice: Vec<Context> = (0..=t).map(|s| e.at_slice(s)).collect();
        let v = self.filter(t, |s, i| per_slice[s].holds_in(World::from_index(i, n)))?;
        let p_e: f64 = v.iter().sum();
        if p_e <= 0.0 {
            return Err(Error::ZeroProbabilityEvidence);
        }
        let mask = q.mask(n);
        let joint: f64 = v.iter().zip(&mask).filter(|(_, &m)| m).map(|(p, _)| p).sum();
        Ok(joint / p_e)
    }

    /// `P(c[t] | E)` by variable elimination on the unraveled network.
    pub fn prob_at_evidence_by_elimination(
        &self,
        q: &CompiledQuery,
        t: usize,
        e: &TimedEvidence,
    ) -> Result<f64> {
        if t == 0 {
            return Err(Error::InvalidTime);
        }
        if e.max_slice() > t {
            return Err(Error::EvidenceBeyondTime {
                slice: e.max_slice(),
                time: t,
            });
        }
        let n = self.n();
        let unrolled = self.kb.dbn.unravel(t, &self.limits)?;
        let targets: Vec<usize> = ((t - 1) * n..t * n).collect();
        let marginal = unrolled.marginal(&targets, e.unrolled_context(n))?;
        Ok(self
            .kb
            .vars()
            .worlds()
            .filter(|w| q.formula.eval(*w))
            .map(|w| marginal.prob_of(w.bits() << ((t - 1) * n)))
            .sum())
    }

    /// `P(c[∞])` when it is determined by the stationary behaviour of the
    /// transition network; otherwise a lower bound at `horizon`.
    pub fn prob_eventually(&self, q: &CompiledQuery, horizon: usize) -> Result<EventualResult> {
        if horizon == 0 {
            return Err(Error::InvalidTime);
        }
        let analysis = self.analysis()?;
        let delta_value = analysis.delta(&q.formula);
        let kind = if analysis.delta_positive(&q.formula) {
            EventualKind::CertainOne
        } else {
            EventualKind::Indeterminate
        };
        let lower_bound = self.prob_within(q, horizon)?;
        Ok(EventualResult {
            kind,
            delta_value,
            lower_bound,
            horizon_used: horizon,
        })
    }
}

/// Removes and returns the mass on `mask` worlds.
fn bank(v: &mut [f64], mask: &[bool]) -> f64 {
    let mut hit = 0.0;
    for (p, &m) in v.iter_mut().zip(mask) {
        if m {
            hit += *p;
            *p = 0.0;
        }
    }
    hit
}

fn zero_rejected(v: &mut [f64], keep: impl Fn(usize) -> bool) {
    for (i, p) in v.iter_mut().enumerate() {
        if !keep(i) {
            *p = 0.0;
        }
    }
}

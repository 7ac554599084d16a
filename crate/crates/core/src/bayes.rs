//! Bayesian networks over Boolean context variables.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::context::{Context, ContextFormula, VarSet, World};
use crate::error::{Error, Limits, Result};
use crate::parallel::{self, Strategy};

/// `P(child = true | parents)` for every assignment of the parents.
///
/// Row `k` of `table` is the parent assignment whose bits, read with
/// `parents[0]` as the most significant, spell `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cpt {
    pub child: usize,
    pub parents: Vec<usize>,
    pub table: Vec<f64>,
}

impl Cpt {
    pub fn new(child: usize, parents: Vec<usize>, table: Vec<f64>) -> Self {
        Cpt {
            child,
            parents,
            table,
        }
    }

    pub fn root(child: usize, p: f64) -> Self {
        Cpt::new(child, Vec::new(), vec![p])
    }

    /// Builds the table from explicit rows `(parent values, probability)`.
    /// Every row must be given exactly once.
    pub fn from_rows(
        child: usize,
        parents: Vec<usize>,
        rows: impl IntoIterator<Item = (Vec<bool>, f64)>,
        names: &dyn Fn(usize) -> String,
    ) -> Result<Self, NetDiagnostic> {
        let k = parents.len();
        let mut table: Vec<Option<f64>> = vec![None; 1 << k];
        for (values, p) in rows {
            assert_eq!(values.len(), k, "row width must match the parent count");
            let row = values.iter().fold(0usize, |acc, &b| acc << 1 | b as usize);
            if table[row].replace(p).is_some() {
                return Err(NetDiagnostic::DuplicateRow {
                    var: names(child),
                    assignment: render_assignment(&parents, row, names),
                });
            }
        }
        let table = table
            .into_iter()
            .enumerate()
            .map(|(row, p)| {
                p.ok_or_else(|| NetDiagnostic::MissingRow {
                    var: names(child),
                    assignment: render_assignment(&parents, row, names),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        Ok(Cpt::new(child, parents, table))
    }

    /// Row selected by the parent values in `bits` (bit `v` = variable `v`).
    #[inline]
    pub fn row(&self, bits: u64) -> usize {
        self.parents
            .iter()
            .fold(0usize, |acc, &p| acc << 1 | (bits >> p & 1) as usize)
    }

    /// `P(child = value(bits) | parents(bits))`.
    #[inline]
    pub fn prob(&self, bits: u64) -> f64 {
        let p = self.table[self.row(bits)];
        if bits >> self.child & 1 == 1 {
            p
        } else {
            1.0 - p
        }
    }
}

/// `p1=0, p2=1` for row `row` of a table over `parents`.
pub(crate) fn render_assignment(
    parents: &[usize],
    row: usize,
    names: &dyn Fn(usize) -> String,
) -> String {
    let k = parents.len();
    parents
        .iter()
        .enumerate()
        .map(|(i, &p)| format!("{}={}", names(p), row >> (k - 1 - i) & 1))
        .collect::<Vec<_>>()
        .join(", ")
}

/// A structural problem with a network.
#[derive(Clone, Debug, PartialEq, Error)]
pub enum NetDiagnostic {
    #[error("cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("no CPT for variable `{0}`")]
    MissingCpt(String),
    #[error("more than one CPT for variable `{0}`")]
    DuplicateCpt(String),
    #[error("variable `{0}` takes no CPT")]
    UnexpectedCpt(String),
    #[error("CPT of `{var}` is missing the row `{var} | {assignment}`")]
    MissingRow { var: String, assignment: String },
    #[error("CPT of `{var}` repeats the row `{var} | {assignment}`")]
    DuplicateRow { var: String, assignment: String },
    #[error("CPT of `{var}` has {found} rows, expected {expected}")]
    ExtraRows {
        var: String,
        expected: usize,
        found: usize,
    },
    #[error("CPT of `{var}` row `{assignment}` has probability {value} outside [0, 1]")]
    ProbabilityOutOfRange {
        var: String,
        assignment: String,
        value: f64,
    },
    #[error("CPT of `{var}` references unknown parent #{parent}")]
    UnknownParent { var: String, parent: usize },
    #[error("CPT of `{var}` lists parent `{parent}` twice")]
    RepeatedParent { var: String, parent: String },
}

/// Checks tables and acyclicity for CPTs over `num_nodes` nodes. Nodes for
/// which `needs_cpt` is true must have exactly one CPT; the others none.
pub(crate) fn check_cpts(
    cpts: &[Cpt],
    num_nodes: usize,
    needs_cpt: &dyn Fn(usize) -> bool,
    names: &dyn Fn(usize) -> String,
) -> Vec<NetDiagnostic> {
    let mut diags = Vec::new();
    let mut owner: Vec<Option<usize>> = vec![None; num_nodes];
    for (i, cpt) in cpts.iter().enumerate() {
        if cpt.child >= num_nodes {
            diags.push(NetDiagnostic::UnknownParent {
                var: format!("#{}", cpt.child),
                parent: cpt.child,
            });
            continue;
        }
        let var = names(cpt.child);
        if !needs_cpt(cpt.child) {
            diags.push(NetDiagnostic::UnexpectedCpt(var));
            continue;
        }
        if owner[cpt.child].replace(i).is_some() {
            diags.push(NetDiagnostic::DuplicateCpt(var.clone()));
        }
        let mut seen = BTreeSet::new();
        let mut parents_ok = true;
        for &p in &cpt.parents {
            if p >= num_nodes {
                diags.push(NetDiagnostic::UnknownParent {
                    var: var.clone(),
                    parent: p,
                });
                parents_ok = false;
            } else if !seen.insert(p) {
                diags.push(NetDiagnostic::RepeatedParent {
                    var: var.clone(),
                    parent: names(p),
                });
                parents_ok = false;
            }
        }
        if !parents_ok {
            continue;
        }
        let expected = 1usize << cpt.parents.len();
        if cpt.table.len() < expected {
            diags.push(NetDiagnostic::MissingRow {
                var: var.clone(),
                assignment: render_assignment(&cpt.parents, cpt.table.len(), names),
            });
        } else if cpt.table.len() > expected {
            diags.push(NetDiagnostic::ExtraRows {
                var: var.clone(),
                expected,
                found: cpt.table.len(),
            });
        }
        for (row, &value) in cpt.table.iter().enumerate().take(expected) {
            if !(0.0..=1.0).contains(&value) {
                diags.push(NetDiagnostic::ProbabilityOutOfRange {
                    var: var.clone(),
                    assignment: render_assignment(&cpt.parents, row, names),
                    value,
                });
            }
        }
    }
    for (node, owner) in owner.iter().enumerate() {
        if needs_cpt(node) && owner.is_none() {
            diags.push(NetDiagnostic::MissingCpt(names(node)));
        }
    }
    if diags.is_empty() {
        if let Some(cycle) = find_cycle(cpts, num_nodes) {
            diags.push(NetDiagnostic::Cycle(cycle.into_iter().map(names).collect()));
        }
    }
    diags
}

/// A directed cycle in the parent → child graph, as a closed node path.
fn find_cycle(cpts: &[Cpt], num_nodes: usize) -> Option<Vec<usize>> {
    let mut children = vec![Vec::new(); num_nodes];
    for cpt in cpts {
        for &p in &cpt.parents {
            children[p].push(cpt.child);
        }
    }
    for list in &mut children {
        list.sort_unstable();
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; num_nodes];
    let mut parent = vec![usize::MAX; num_nodes];
    for root in 0..num_nodes {
        if state[root] != 0 {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        state[root] = 1;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            if let Some(&child) = children[node].get(*next) {
                *next += 1;
                match state[child] {
                    0 => {
                        state[child] = 1;
                        parent[child] = node;
                        stack.push((child, 0));
                    }
                    1 => {
                        let mut path = vec![child];
                        let mut cur = node;
                        while cur != child {
                            path.push(cur);
                            cur = parent[cur];
                        }
                        path.push(child);
                        path.reverse();
                        return Some(path);
                    }
                    _ => {}
                }
            } else {
                state[node] = 2;
                stack.pop();
            }
        }
    }
    None
}

/// Checks a network given as raw parts.
pub fn validate(vars: &VarSet, cpts: &[Cpt]) -> Result<(), Vec<NetDiagnostic>> {
    let names = |i: usize| vars.name(i).to_string();
    let diags = check_cpts(cpts, vars.len(), &|_| true, &names);
    if diags.is_empty() {
        Ok(())
    } else {
        Err(diags)
    }
}

/// A validated Bayesian network; `cpts[i]` is the CPT of variable `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct BayesNet {
    vars: VarSet,
    cpts: Vec<Cpt>,
}

impl BayesNet {
    pub fn new(vars: VarSet, mut cpts: Vec<Cpt>) -> Result<Self> {
        validate(&vars, &cpts).map_err(Error::InvalidNetwork)?;
        cpts.sort_by_key(|c| c.child);
        Ok(BayesNet { vars, cpts })
    }

    pub fn vars(&self) -> &VarSet {
        &self.vars
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn cpt(&self, var: usize) -> &Cpt {
        &self.cpts[var]
    }

    /// Parent → child pairs.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.cpts
            .iter()
            .flat_map(|c| c.parents.iter().map(move |&p| (p, c.child)))
            .collect()
    }

    /// `∏_x P(x | π(x))` under `w`.
    pub fn world_prob(&self, w: World) -> f64 {
        self.cpts.iter().map(|c| c.prob(w.bits())).product()
    }

    /// Probability mass of the worlds satisfying `phi`.
    pub fn formula_prob(&self, phi: &ContextFormula, cap: usize) -> Result<f64> {
        self.formula_prob_with(phi, cap, Strategy::default())
    }

    pub fn formula_prob_with(&self, phi: &ContextFormula, cap: usize, strategy: Strategy) -> Result<f64> {
        let n = self.vars.len();
        Limits::check("world enumeration", n, cap)?;
        if phi.is_false() {
            return Ok(0.0);
        }
        Ok(parallel::sum_range(strategy, 1 << n, |i| {
            let w = World::from_index(i, n);
            if phi.eval(w) {
                self.world_prob(w)
            } else {
                0.0
            }
        }))
    }

    /// The full joint as a dense vector over world indices.
    pub fn joint(&self, cap: usize, strategy: Strategy) -> Result<WorldDistribution> {
        let n = self.vars.len();
        Limits::check("joint distribution", n, cap)?;
        let probs = parallel::map_range(strategy, 1 << n, |i| {
            self.world_prob(World::from_index(i, n))
        });
        Ok(WorldDistribution { nvars: n, probs })
    }

    /// `P(targets | evidence)` by variable elimination with a min-fill
    /// ordering (ties broken by variable index).
    pub fn marginal(&self, targets: &[usize], evidence: Context) -> Result<TargetDistribution> {
        let n = self.vars.len();
        for &t in targets {
            if t >= n {
                return Err(Error::VariableMismatch(format!("target #{t} is not declared")));
            }
        }
        if evidence.max_var().is_some_and(|v| v >= n) {
            return Err(Error::VariableMismatch("evidence mentions undeclared variables".into()));
        }
        let mut target_set = BTreeSet::new();
        for &t in targets {
            if !target_set.insert(t) {
                return Err(Error::VariableMismatch(format!(
                    "target `{}` listed twice",
                    self.vars.name(t)
                )));
            }
        }
        let mut factors: Vec<Factor> = self
            .cpts
            .iter()
            .map(|c| Factor::from_cpt(c, evidence))
            .collect();
        for var in elimination_order(&factors, n, &target_set) {
            let (with, without): (Vec<Factor>, Vec<Factor>) =
                factors.into_iter().partition(|f| f.scope.contains(&var));
            factors = without;
            if let Some(product) = with.into_iter().reduce(|a, b| a.product(&b)) {
                factors.push(product.sum_out(var));
            }
        }
        let joint = factors
            .into_iter()
            .reduce(|a, b| a.product(&b))
            .unwrap_or_else(Factor::unit);
        let k = targets.len();
        let mut probs = vec![0.0; 1 << k];
        for (row, p) in probs.iter_mut().enumerate() {
            let mut bits = 0u64;
            for (i, &t) in targets.iter().enumerate() {
                if row >> (k - 1 - i) & 1 == 1 {
                    bits |= 1 << t;
                }
            }
            *p = joint.value_at(bits);
        }
        let z: f64 = probs.iter().sum();
        if z <= 0.0 {
            return Err(Error::ZeroProbabilityEvidence);
        }
        for p in &mut probs {
            *p /= z;
        }
        Ok(TargetDistribution {
            targets: targets.to_vec(),
            probs,
        })
    }
}

/// Distribution over the assignments of `targets`; row bits are read with
/// `targets[0]` most significant.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetDistribution {
    pub targets: Vec<usize>,
    pub probs: Vec<f64>,
}

impl TargetDistribution {
    /// Probability of the assignment in which variable `v` takes bit `v`
    /// of `bits`.
    pub fn prob_of(&self, bits: u64) -> f64 {
        let row = self
            .targets
            .iter()
            .fold(0usize, |acc, &t| acc << 1 | (bits >> t & 1) as usize);
        self.probs[row]
    }
}

/// A probability vector over the `2^n` worlds, indexed by world index.
#[derive(Clone, Debug, PartialEq)]
pub struct WorldDistribution {
    nvars: usize,
    probs: Vec<f64>,
}

impl WorldDistribution {
    pub fn new(nvars: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != 1 << nvars {
            return Err(Error::DimensionMismatch {
                expected: 1 << nvars,
                found: probs.len(),
            });
        }
        Ok(WorldDistribution { nvars, probs })
    }

    /// All mass on `w`.
    pub fn point(nvars: usize, w: World) -> Self {
        let mut probs = vec![0.0; 1 << nvars];
        probs[w.index(nvars)] = 1.0;
        WorldDistribution { nvars, probs }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }

    pub fn prob(&self, w: World) -> f64 {
        self.probs[w.index(self.nvars)]
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Mass on the worlds satisfying `phi`.
    pub fn mass(&self, phi: &ContextFormula) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .filter(|(i, _)| phi.eval(World::from_index(*i, self.nvars)))
            .map(|(_, p)| p)
            .sum()
    }

    /// Non-negative and summing to one within `tol`.
    pub fn is_normalized(&self, tol: f64) -> bool {
        self.probs.iter().all(|&p| p >= -tol) && (self.total() - 1.0).abs() <= tol
    }
}

/// A table over a sorted scope of Boolean variables; entry `k` holds the
/// assignment where `scope[i]` takes bit `i` of `k`.
#[derive(Clone, Debug)]
struct Factor {
    scope: Vec<usize>,
    values: Vec<f64>,
}

impl Factor {
    fn unit() -> Self {
        Factor {
            scope: Vec::new(),
            values: vec![1.0],
        }
    }

    fn from_cpt(cpt: &Cpt, evidence: Context) -> Self {
        let mut scope: Vec<usize> = cpt.parents.clone();
        scope.push(cpt.child);
        scope.sort_unstable();
        let values = (0..1usize << scope.len())
            .map(|k| {
                let bits = spread(&scope, k);
                if consistent_on(&scope, bits, evidence) {
                    cpt.prob(bits)
                } else {
                    0.0
                }
            })
            .collect();
        Factor { scope, values }
    }

    fn value_at(&self, bits: u64) -> f64 {
        self.values[gather(&self.scope, bits)]
    }

    fn product(&self, other: &Factor) -> Factor {
        let mut scope: Vec<usize> = self.scope.iter().chain(&other.scope).copied().collect();
        scope.sort_unstable();
        scope.dedup();
        let values = (0..1usize << scope.len())
            .map(|k| {
                let bits = spread(&scope, k);
                self.value_at(bits) * other.value_at(bits)
            })
            .collect();
        Factor { scope, values }
    }

    fn sum_out(&self, var: usize) -> Factor {
        let pos = self.scope.iter().position(|&v| v == var).expect("var in scope");
        let scope: Vec<usize> = self.scope.iter().copied().filter(|&v| v != var).collect();
        let values = (0..1usize << scope.len())
            .map(|k| {
                let low = k & ((1 << pos) - 1);
                let high = (k >> pos) << (pos + 1);
                self.values[high | low] + self.values[high | low | 1 << pos]
            })
            .collect();
        Factor { scope, values }
    }
}

/// Variable bits for local assignment `k` over `scope`.
fn spread(scope: &[usize], k: usize) -> u64 {
    scope
        .iter()
        .enumerate()
        .filter(|(i, _)| k >> i & 1 == 1)
        .fold(0u64, |acc, (_, &v)| acc | 1 << v)
}

/// Local index over `scope` of the variable bits `bits`.
fn gather(scope: &[usize], bits: u64) -> usize {
    scope
        .iter()
        .enumerate()
        .fold(0usize, |acc, (i, &v)| acc | ((bits >> v & 1) as usize) << i)
}

/// Whether `bits` agrees with `evidence` on the variables of `scope`.
fn consistent_on(scope: &[usize], bits: u64, evidence: Context) -> bool {
    scope.iter().all(|&v| {
        if evidence.positive_mask() >> v & 1 == 1 {
            bits >> v & 1 == 1
        } else if evidence.negative_mask() >> v & 1 == 1 {
            bits >> v & 1 == 0
        } else {
            true
        }
    })
}

/// Greedy min-fill order over the non-target variables, ties broken by
/// the lower variable index.
fn elimination_order(factors: &[Factor], n: usize, targets: &BTreeSet<usize>) -> Vec<usize> {
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for f in factors {
        for &a in &f.scope {
            for &b in &f.scope {
                if a != b {
                    adj[a].insert(b);
                }
            }
        }
    }
    let mut remaining: BTreeSet<usize> = (0..n).filter(|v| !targets.contains(v)).collect();
    let mut order = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        let best = remaining
            .iter()
            .copied()
            .min_by_key(|&v| {
                let nbrs: Vec<usize> = adj[v].iter().copied().collect();
                let mut fill = 0usize;
                for (i, &a) in nbrs.iter().enumerate() {
                    for &b in &nbrs[i + 1..] {
                        if !adj[a].contains(&b) {
                            fill += 1;
                        }
                    }
                }
                (fill, v)
            })
            .expect("remaining is non-empty");
        let nbrs: Vec<usize> = adj[best].iter().copied().collect();
        for &a in &nbrs {
            for &b in &nbrs {
                if a != b {
                    adj[a].insert(b);
                }
            }
            adj[a].remove(&best);
        }
        adj[best].clear();
        remaining.remove(&best);
        order.push(best);
    }
    order
}

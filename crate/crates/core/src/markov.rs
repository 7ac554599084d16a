//! The Markov chain a transition network induces over worlds.
//!
//! Stationary distributions of a finite chain form a polytope whose
//! vertices are the per-class stationary vectors of its recurrent classes
//! (bottom strongly connected components). The minimum stationary mass on
//! a formula is therefore attained at one of those vertices.

use std::collections::VecDeque;

use crate::bayes::WorldDistribution;
use crate::context::{ContextFormula, World};
use crate::dbn::TransitionMatrix;
use crate::TOLERANCE;

/// A closed communicating class and its stationary distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct RecurrentClass {
    /// World indices, ascending.
    pub states: Vec<usize>,
    /// Greatest common divisor of the cycle lengths inside the class.
    pub period: usize,
    /// Supported only on `states`.
    pub stationary: WorldDistribution,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainAnalysis {
    /// Strongly connected components of the support graph, each sorted,
    /// ordered by their smallest state.
    pub components: Vec<Vec<usize>>,
    /// Components without outgoing edges.
    pub recurrent: Vec<RecurrentClass>,
    pub irreducible: bool,
    pub aperiodic: bool,
}

impl ChainAnalysis {
    /// `min` over recurrent classes of the stationary mass on `phi`.
    pub fn delta(&self, phi: &ContextFormula) -> f64 {
        self.recurrent
            .iter()
            .map(|c| class_mass(c, phi))
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether every recurrent class contains a world satisfying `phi`.
    /// Stationary vectors are strictly positive on their class, so this is
    /// exactly `delta(phi) > 0`, decided without floating point.
    pub fn delta_positive(&self, phi: &ContextFormula) -> bool {
        let n = self.nvars();
        self.recurrent
            .iter()
            .all(|c| c.states.iter().any(|&s| phi.eval(World::from_index(s, n))))
    }

    fn nvars(&self) -> usize {
        self.recurrent
            .first()
            .map(|c| c.stationary.nvars())
            .unwrap_or(0)
    }
}

fn class_mass(class: &RecurrentClass, phi: &ContextFormula) -> f64 {
    let n = class.stationary.nvars();
    class
        .states
        .iter()
        .filter(|&&s| phi.eval(World::from_index(s, n)))
        .map(|&s| class.stationary.probs()[s])
        .sum()
}

/// Successor lists of the support graph (edges with probability > 0).
fn support(m: &TransitionMatrix) -> Vec<Vec<usize>> {
    (0..m.size())
        .map(|i| {
            m.row(i)
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(j, _)| j)
                .collect()
        })
        .collect()
}

/// Tarjan's algorithm, iterative.
fn strongly_connected(succ: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = succ.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut out = Vec::new();
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut edge)) = call.last_mut() {
            if let Some(&w) = succ[v].get(*edge) {
                *edge += 1;
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("component members are stacked");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    out.push(comp);
                }
            }
        }
    }
    out.sort_by_key(|c| c[0]);
    out
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Period of a closed class via BFS levels: the gcd of
/// `level(u) + 1 - level(v)` over the class's edges.
fn period(states: &[usize], succ: &[Vec<usize>], member: &[bool]) -> usize {
    let root = states[0];
    if succ[root].contains(&root) {
        return 1;
    }
    let mut level = vec![usize::MAX; succ.len()];
    level[root] = 0;
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        for &v in &succ[u] {
            if member[v] && level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut g = 0;
    for &u in states {
        for &v in &succ[u] {
            if member[v] {
                let diff = (level[u] + 1).abs_diff(level[v]);
                g = gcd(g, diff);
                if g == 1 {
                    return 1;
                }
            }
        }
    }
    g.max(1)
}

/// Solves `π P = π`, `Σπ = 1` for the chain restricted to a closed class,
/// by Gaussian elimination with partial pivoting.
fn class_stationary(states: &[usize], m: &TransitionMatrix) -> Vec<f64> {
    let k = states.len();
    if k == 1 {
        return vec![1.0];
    }
    // Row i of (Pᵀ - I): Σ_j π_j P[j][i] - π_i = 0; the last row becomes Σπ = 1.
    let mut a = vec![vec![0.0; k + 1]; k];
    for (i, &si) in states.iter().enumerate() {
        for (j, &sj) in states.iter().enumerate() {
            a[i][j] = m.get(sj, si);
        }
        a[i][i] -= 1.0;
    }
    a[k - 1].fill(1.0);
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))
            .expect("non-empty pivot range");
        a.swap(col, pivot);
        let p = a[col][col];
        if p == 0.0 {
            continue;
        }
        let pivot_row = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != col {
                let factor = row[col] / p;
                if factor != 0.0 {
                    for (x, &y) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                        *x -= factor * y;
                    }
                }
            }
        }
    }
    let mut pi: Vec<f64> = (0..k).map(|i| a[i][k] / a[i][i]).collect();
    // Clear round-off below zero and renormalize.
    for p in &mut pi {
        if *p < 0.0 {
            *p = 0.0;
        }
    }
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= total);
    pi
}

/// Support graph, components, recurrent classes with their periods and
/// stationary distributions.
pub fn analyze(m: &TransitionMatrix) -> ChainAnalysis {
    let succ = support(m);
    let components = strongly_connected(&succ);
    let mut component_of = vec![0usize; succ.len()];
    for (c, comp) in components.iter().enumerate() {
        for &s in comp {
            component_of[s] = c;
        }
    }
    let mut recurrent = Vec::new();
    for (c, comp) in components.iter().enumerate() {
        let closed = comp
            .iter()
            .all(|&u| succ[u].iter().all(|&v| component_of[v] == c));
        if !closed {
            continue;
        }
        let member: Vec<bool> = (0..succ.len()).map(|s| component_of[s] == c).collect();
        let period = period(comp, &succ, &member);
        let pi = class_stationary(comp, m);
        let mut probs = vec![0.0; m.size()];
        for (&s, &p) in comp.iter().zip(&pi) {
            probs[s] = p;
        }
        let stationary = WorldDistribution::new(m.nvars(), probs).expect("sized to the matrix");
        recurrent.push(RecurrentClass {
            states: comp.clone(),
            period,
            stationary,
        });
    }
    ChainAnalysis {
        irreducible: components.len() == 1,
        aperiodic: recurrent.iter().all(|c| c.period == 1),
        components,
        recurrent,
    }
}

/// `δ(φ)`: the least mass any stationary distribution puts on `phi`.
pub fn delta(m: &TransitionMatrix, phi: &ContextFormula) -> f64 {
    analyze(m).delta(phi)
}

/// `‖dist · M - dist‖∞`.
pub fn stationary_residual(m: &TransitionMatrix, dist: &WorldDistribution) -> f64 {
    let size = m.size();
    let probs = dist.probs();
    (0..size)
        .map(|j| {
            let flow: f64 = (0..size).map(|i| probs[i] * m.get(i, j)).sum();
            (flow - probs[j]).abs()
        })
        .fold(0.0, f64::max)
}

/// Whether `dist · M = dist` within the crate tolerance.
pub fn stationary_check(m: &TransitionMatrix, dist: &WorldDistribution) -> bool {
    dist.nvars() == m.nvars() && stationary_residual(m, dist) <= TOLERANCE
}

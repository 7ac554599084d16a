//! Two-slice networks, dynamic Bayesian networks, and the world-level
//! transition operator they induce.
//!
//! A [`TwoSliceNet`] over `n` variables indexes its nodes `0..n` for the
//! current slice `V` and `n..2n` for the next slice `V'`. Only primed nodes
//! carry CPTs; their parents may come from either slice.

use crate::bayes::{self, BayesNet, Cpt, WorldDistribution};
use crate::context::{VarSet, World};
use crate::error::{Error, Limits, Result};
use crate::parallel::{self, Strategy};

#[derive(Clone, Debug, PartialEq)]
pub struct TwoSliceNet {
    vars: VarSet,
    /// `cpts[i]` is the CPT of primed node `n + i`.
    cpts: Vec<Cpt>,
}

impl TwoSliceNet {
    pub fn new(vars: VarSet, mut cpts: Vec<Cpt>) -> Result<Self> {
        let n = vars.len();
        let names = |i: usize| node_name(&vars, i);
        let diags = bayes::check_cpts(&cpts, 2 * n, &|i| i >= n, &names);
        if !diags.is_empty() {
            return Err(Error::InvalidNetwork(diags));
        }
        cpts.sort_by_key(|c| c.child);
        Ok(TwoSliceNet { vars, cpts })
    }

    /// Node index of `x'` for variable `var`.
    pub fn primed(&self, var: usize) -> usize {
        self.vars.len() + var
    }

    pub fn vars(&self) -> &VarSet {
        &self.vars
    }

    /// CPTs of the primed nodes, in variable order.
    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    /// `P(V_{t+1} = target | V_t = source)`: the product of every primed
    /// CPT under the joint assignment of both slices.
    pub fn transition_prob(&self, source: World, target: World) -> f64 {
        let n = self.vars.len();
        let bits = source.bits() | target.bits() << n;
        self.cpts.iter().map(|c| c.prob(bits)).product()
    }
}

/// `x` for current-slice nodes, `x'` for next-slice nodes.
pub(crate) fn node_name(vars: &VarSet, node: usize) -> String {
    let n = vars.len();
    if node < n {
        vars.name(node).to_string()
    } else if node < 2 * n {
        format!("{}'", vars.name(node - n))
    } else {
        format!("#{node}")
    }
}

/// Initial network plus transition network over the same variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Dbn {
    initial: BayesNet,
    transition: TwoSliceNet,
}

impl Dbn {
    pub fn new(initial: BayesNet, transition: TwoSliceNet) -> Result<Self> {
        if initial.vars() != transition.vars() {
            return Err(Error::VariableMismatch(
                "initial and transition networks declare different variables".into(),
            ));
        }
        Ok(Dbn {
            initial,
            transition,
        })
    }

    pub fn initial(&self) -> &BayesNet {
        &self.initial
    }

    pub fn transition(&self) -> &TwoSliceNet {
        &self.transition
    }

    pub fn vars(&self) -> &VarSet {
        self.initial.vars()
    }

    /// Distribution of `V_t`: the initial distribution advanced `t - 1`
    /// forward steps.
    pub fn slice_marginal(&self, t: usize, limits: &Limits, strategy: Strategy) -> Result<WorldDistribution> {
        if t == 0 {
            return Err(Error::InvalidTime);
        }
        let mut dist = initial_distribution(&self.initial, limits, strategy)?;
        if t == 1 {
            return Ok(dist);
        }
        let m = transition_matrix(&self.transition, limits, strategy)?;
        for _ in 1..t {
            dist = forward_step(&dist, &m, strategy)?;
        }
        Ok(dist)
    }

    /// The network over `V_1 ∪ … ∪ V_t`. Variable `x` of slice `i` becomes
    /// node `(i - 1)·n + x`, named `x@i`.
    pub fn unravel(&self, t: usize, limits: &Limits) -> Result<BayesNet> {
        if t == 0 {
            return Err(Error::InvalidTime);
        }
        let n = self.vars().len();
        Limits::check("unraveled network", t * n, limits.unrolled_vars)?;
        if t == 1 {
            return Ok(self.initial.clone());
        }
        let names = (1..=t).flat_map(|i| {
            self.vars()
                .names()
                .iter()
                .map(move |name| format!("{name}@{i}"))
        });
        let vars = VarSet::new(names)?;
        let mut cpts: Vec<Cpt> = self.initial.cpts().to_vec();
        for slice in 2..=t {
            let prev = (slice - 2) * n;
            for c in self.transition.cpts() {
                // unprimed nodes land in slice - 1, primed ones in slice
                let remap = |node: usize| prev + node;
                cpts.push(Cpt::new(
                    remap(c.child),
                    c.parents.iter().map(|&p| remap(p)).collect(),
                    c.table.clone(),
                ));
            }
        }
        BayesNet::new(vars, cpts)
    }
}

/// Row-stochastic matrix over worlds; rows are sources, columns targets,
/// both in world-index order.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMatrix {
    nvars: usize,
    data: Vec<f64>,
}

impl TransitionMatrix {
    pub fn from_rows(nvars: usize, data: Vec<f64>) -> Result<Self> {
        let size = 1usize << nvars;
        if data.len() != size * size {
            return Err(Error::DimensionMismatch {
                expected: size * size,
                found: data.len(),
            });
        }
        Ok(TransitionMatrix { nvars, data })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Number of worlds.
    pub fn size(&self) -> usize {
        1 << self.nvars
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.data[from * self.size() + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        let s = self.size();
        &self.data[from * s..(from + 1) * s]
    }

    /// Largest deviation of a row sum from one.
    pub fn max_row_defect(&self) -> f64 {
        (0..self.size())
            .map(|i| (self.row(i).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Builds the dense world transition matrix of `tbn`, one row per source
/// world (rows are computed independently, in parallel when requested).
pub fn transition_matrix(tbn: &TwoSliceNet, limits: &Limits, strategy: Strategy) -> Result<TransitionMatrix> {
    let n = tbn.vars().len();
    Limits::check("transition matrix", n, limits.matrix_vars)?;
    let size = 1usize << n;
    let mut data = vec![0.0; size * size];
    parallel::for_each_chunk_mut(strategy, &mut data, size, |from, row| {
        let source = World::from_index(from, n);
        for (to, cell) in row.iter_mut().enumerate() {
            *cell = tbn.transition_prob(source, World::from_index(to, n));
        }
    });
    Ok(TransitionMatrix { nvars: n, data })
}

/// The world distribution of `bn`.
pub fn initial_distribution(bn: &BayesNet, limits: &Limits, strategy: Strategy) -> Result<WorldDistribution> {
    bn.joint(limits.enumeration_vars, strategy)
}

/// One step of `dist · M`.
pub fn forward_step(dist: &WorldDistribution, m: &TransitionMatrix, strategy: Strategy) -> Result<WorldDistribution> {
    if dist.nvars() != m.nvars() {
        return Err(Error::DimensionMismatch {
            expected: m.size(),
            found: dist.probs().len(),
        });
    }
    let probs = step_vector(dist.probs(), m, strategy);
    WorldDistribution::new(m.nvars(), probs)
}

/// Column block width for the parallel vector–matrix product.
const COLUMN_BLOCK: usize = 256;

/// `v · M`; each output entry is accumulated over source rows in order, so
/// the result does not depend on the strategy.
pub(crate) fn step_vector(v: &[f64], m: &TransitionMatrix, strategy: Strategy) -> Vec<f64> {
    let size = m.size();
    let mut out = vec![0.0; size];
    parallel::for_each_chunk_mut(strategy, &mut out, COLUMN_BLOCK, |block, cells| {
        let start = block * COLUMN_BLOCK;
        for (from, &weight) in v.iter().enumerate() {
            if weight == 0.0 {
                continue;
            }
            let row = &m.row(from)[start..start + cells.len()];
            for (cell, &p) in cells.iter_mut().zip(row) {
                *cell += weight * p;
            }
        }
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy1() -> Dbn {
        let vars = VarSet::new(["x"]).unwrap();
        let initial = BayesNet::new(vars.clone(), vec![Cpt::root(0, 0.7)]).unwrap();
        let tbn = TwoSliceNet::new(vars, vec![Cpt::new(1, vec![0], vec![0.2, 0.9])]).unwrap();
        Dbn::new(initial, tbn).unwrap()
    }

    fn identity() -> TwoSliceNet {
        let vars = VarSet::new(["x"]).unwrap();
        TwoSliceNet::new(vars, vec![Cpt::new(1, vec![0], vec![0.0, 1.0])]).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn identity_transition() {
        let m = transition_matrix(&identity(), &Limits::default(), Strategy::default()).unwrap();
        // index 0 = {¬x}, index 1 = {x}
        assert_eq!(m.row(1), &[0.0, 1.0]);
        assert_eq!(m.row(0), &[1.0, 0.0]);
    }

    #[test]
    fn toy_transition_and_step() {
        let d = toy1();
        let m = transition_matrix(d.transition(), &Limits::default(), Strategy::Sequential).unwrap();
        assert!(close(m.get(1, 1), 0.9) && close(m.get(1, 0), 0.1));
        assert!(close(m.get(0, 1), 0.2) && close(m.get(0, 0), 0.8));
        assert!(m.max_row_defect() < 1e-12);
        let init = initial_distribution(d.initial(), &Limits::default(), Strategy::default()).unwrap();
        assert!(close(init.probs()[1], 0.7) && close(init.probs()[0], 0.3));
        let next = forward_step(&init, &m, Strategy::default()).unwrap();
        assert!(close(next.probs()[1], 0.69) && close(next.probs()[0], 0.31));
        assert!(next.is_normalized(1e-12));
    }

    #[test]
    fn slice_marginals() {
        let d = toy1();
        let limits = Limits::default();
        let s1 = d.slice_marginal(1, &limits, Strategy::default()).unwrap();
        assert_eq!(s1, initial_distribution(d.initial(), &limits, Strategy::default()).unwrap());
        let s2 = d.slice_marginal(2, &limits, Strategy::default()).unwrap();
        assert!(close(s2.probs()[1], 0.69));
        assert_eq!(d.slice_marginal(0, &limits, Strategy::default()), Err(Error::InvalidTime));

        let det = Dbn::new(d.initial().clone(), identity()).unwrap();
        for t in 1..6 {
            assert_eq!(det.slice_marginal(t, &limits, Strategy::default()).unwrap(), s1);
        }
    }

    #[test]
    fn point_mass_stays_under_identity() {
        let m = transition_matrix(&identity(), &Limits::default(), Strategy::default()).unwrap();
        let p = WorldDistribution::point(1, World::from_bits(1));
        assert_eq!(forward_step(&p, &m, Strategy::default()).unwrap(), p);
    }

    #[test]
    fn unravel_structure() {
        let d = toy1();
        let limits = Limits::default();
        assert_eq!(&d.unravel(1, &limits).unwrap(), d.initial());
        let u = d.unravel(2, &limits).unwrap();
        assert_eq!(u.vars().names(), &["x@1".to_string(), "x@2".to_string()]);
        assert_eq!(u.edges(), vec![(0, 1)]);
        assert_eq!(u.cpt(1).table, vec![0.2, 0.9]);
        let m = u.marginal(&[1], crate::context::Context::empty()).unwrap();
        assert!(close(m.probs[1], 0.69));
    }

    #[test]
    fn unravel_three_variables_three_slices() {
        let vars = VarSet::new(["x", "y", "z"]).unwrap();
        let initial = BayesNet::new(
            vars.clone(),
            vec![
                Cpt::root(0, 0.3),
                Cpt::new(1, vec![0], vec![0.1, 0.6]),
                Cpt::new(2, vec![0], vec![0.2, 0.5]),
            ],
        )
        .unwrap();
        // x' ← x ; y' ← x', y ; z' ← x', z
        let tbn = TwoSliceNet::new(
            vars,
            vec![
                Cpt::new(3, vec![0], vec![0.1, 0.8]),
                Cpt::new(4, vec![3, 1], vec![0.05, 0.9, 0.4, 0.95]),
                Cpt::new(5, vec![3, 2], vec![0.05, 0.9, 0.3, 0.95]),
            ],
        )
        .unwrap();
        let d = Dbn::new(initial, tbn).unwrap();
        let u = d.unravel(3, &Limits::default()).unwrap();
        assert_eq!(u.vars().len(), 9);
        let mut edges = u.edges();
        edges.sort();
        assert_eq!(
            edges,
            vec![(0, 1), (0, 2), (0, 3), (1, 4), (2, 5), (3, 4), (3, 5), (3, 6), (4, 7), (5, 8), (6, 7), (6, 8)]
        );
    }

    #[test]
    fn caps_are_enforced() {
        let d = toy1();
        let limits = Limits {
            unrolled_vars: 3,
            ..Limits::default()
        };
        assert!(matches!(d.unravel(4, &limits), Err(Error::CapExceeded { .. })));
        let vars = VarSet::new((0..13).map(|i| format!("v{i}"))).unwrap();
        let cpts = (0..13).map(|i| Cpt::new(13 + i, vec![], vec![0.5])).collect();
        let big = TwoSliceNet::new(vars, cpts).unwrap();
        assert!(matches!(
            transition_matrix(&big, &Limits::default(), Strategy::default()),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn tbn_rejects_cpt_on_unprimed() {
        let vars = VarSet::new(["x"]).unwrap();
        let err = TwoSliceNet::new(vars, vec![Cpt::root(0, 0.5), Cpt::root(1, 0.5)]).unwrap_err();
        assert!(err.to_string().contains("`x` takes no CPT"), "{err}");
    }

    #[test]
    fn tbn_rejects_primed_cycle() {
        let vars = VarSet::new(["x", "y"]).unwrap();
        let err = TwoSliceNet::new(
            vars,
            vec![Cpt::new(2, vec![3], vec![0.5, 0.5]), Cpt::new(3, vec![2], vec![0.5, 0.5])],
        )
        .unwrap_err();
        assert!(err.to_string().contains("cycle: x' -> y' -> x'"), "{err}");
    }
}
